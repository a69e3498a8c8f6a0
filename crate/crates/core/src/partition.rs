//! Smooth dyadic partitions of unity on the half line.
//!
//! `theta` rises from 0 at `x = 1/2` to 1 at `x = 1`; `eta(x) = theta(x) - theta(x/2)`
//! is supported in `[1/2, 2]` and its dyadic dilates sum to 1. The square root
//! `psi = sqrt(eta)` is smooth as well and satisfies `sum psi(2^{-j} x)^2 = 1`.

use std::f64::consts::FRAC_PI_2;

fn g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth transition with `beta(0) = 0`, `beta(1) = 1` and `beta(x) + beta(1 - x) = 1`.
pub fn beta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = g(x);
        a / (a + g(1.0 - x))
    }
}

/// Smooth step in `x > 0`: 0 below `1/2`, 1 above `1`.
pub fn theta(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let u = x.log2();
    if u <= -1.0 {
        0.0
    } else if u >= 0.0 {
        1.0
    } else {
        (FRAC_PI_2 * beta(u + 1.0)).sin().powi(2)
    }
}

/// `theta(x) - theta(x / 2)`.
pub fn eta(x: f64) -> f64 {
    theta(x) - theta(x / 2.0)
}

/// Square-root partition piece with `sum_j psi(2^{-j} x)^2 = 1`.
pub fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let u = x.log2();
    if u <= -1.0 || u >= 1.0 {
        0.0
    } else if u <= 0.0 {
        (FRAC_PI_2 * beta(u + 1.0)).sin()
    } else {
        (FRAC_PI_2 * beta(u)).cos()
    }
}

/// A finite dyadic family `eta(2^{-j} x)` for `j` in a range.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    pub j_min: i32,
    pub j_max: i32,
    pub squared: bool,
}

impl DyadicPartition {
    pub fn new(j_min: i32, j_max: i32, squared: bool) -> Self {
        Self { j_min, j_max, squared }
    }

    /// Value of piece `j` at `x`.
    pub fn piece(&self, j: i32, x: f64) -> f64 {
        let y = x * 2f64.powi(-j);
        if self.squared {
            psi(y)
        } else {
            eta(y)
        }
    }

    /// Sum of the pieces (or of their squares for the squared variant).
    pub fn total(&self, x: f64) -> f64 {
        (self.j_min..=self.j_max)
            .map(|j| {
                let v = self.piece(j, x);
                if self.squared {
                    v * v
                } else {
                    v
                }
            })
            .sum()
    }

    /// Band where the total is exactly one.
    pub fn covered_band(&self) -> (f64, f64) {
        (2f64.powi(self.j_min), 2f64.powi(self.j_max))
    }
}

/// Build a partition over `j` in a range.
pub fn dyadic_partition(j_min: i32, j_max: i32, squared: bool) -> DyadicPartition {
    DyadicPartition::new(j_min, j_max, squared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping() {
        let p = dyadic_partition(-5, 5, false);
        let q = dyadic_partition(-5, 5, true);
        for i in 0..1000 {
            let x = 2f64.powf(-5.0 + 10.0 * i as f64 / 999.0);
            assert!((p.total(x) - 1.0).abs() < 1e-14, "{x}");
            assert!((q.total(x) - 1.0).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn support() {
        for i in 0..1000 {
            let x = 4.0 * i as f64 / 999.0;
            if !(0.5..=2.0).contains(&x) {
                assert_eq!(eta(x), 0.0);
                assert_eq!(psi(x), 0.0);
            }
        }
    }
}
