//! Arithmetic and geometry of the Heisenberg group H^nu.
//!
//! Points are `(z, t)` with `z = x + i y` in C^nu. The product is
//! `(z', t') . (z, t) = (z' + z, t' + t + S(z', z))` with
//! `S(z', z) = 4 nu (<y', x> - <x', y>)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dimension data for a fixed `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupContext {
    pub nu: usize,
}

impl GroupContext {
    pub fn new(nu: usize) -> Result<Self> {
        if nu == 0 {
            return Err(Error::Domain("nu must be at least 1".into()));
        }
        Ok(Self { nu })
    }

    /// Homogeneous dimension `2 nu + 2`.
    pub fn dim(&self) -> usize {
        2 * self.nu + 2
    }

    /// Tiling base `2 nu + 1`.
    pub fn base(&self) -> usize {
        2 * self.nu + 1
    }

    /// Symplectic factor `4 nu`.
    pub fn symp(&self) -> f64 {
        4.0 * self.nu as f64
    }

    /// Upper constant of the gauge/Koranyi comparison as stated in the literature.
    pub fn stated_comparison_constant(&self) -> f64 {
        let n = self.nu as f64;
        (4.0 * n * n + 2.0 * n).powf(0.25)
    }

    /// Sharp upper constant `sup ||g||_K / ||g||`, attained at `|x_j| = |y_j| = |t|^{1/2}`.
    pub fn sharp_comparison_constant(&self) -> f64 {
        let n = self.nu as f64;
        (8.0 * n * n).powf(0.25)
    }

    pub fn origin(&self) -> HPoint {
        HPoint::zero(self.nu)
    }
}

/// A group element `(x, y, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

/// Which homogeneous norm to use for distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Gauge,
    Koranyi,
}

/// `S(a, b) = 4 nu (<a.y, b.x> - <a.x, b.y>)` for flat coordinate slices.
#[inline]
pub fn symplectic(ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    let nu = ax.len();
    let mut s = 0.0;
    for j in 0..nu {
        s += ay[j] * bx[j] - ax[j] * by[j];
    }
    4.0 * nu as f64 * s
}

/// Same as [`symplectic`] with `z` packed as `[x_1..x_nu, y_1..y_nu]`.
#[inline]
pub fn symplectic_packed(a: &[f64], b: &[f64]) -> f64 {
    let nu = a.len() / 2;
    symplectic(&a[..nu], &a[nu..], &b[..nu], &b[nu..])
}

impl HPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Domain("x and y must have equal positive length".into()));
        }
        if !(x.iter().chain(y.iter()).all(|v| v.is_finite()) && t.is_finite()) {
            return Err(Error::Domain("coordinates must be finite".into()));
        }
        Ok(Self { x, y, t })
    }

    pub fn zero(nu: usize) -> Self {
        Self { x: vec![0.0; nu], y: vec![0.0; nu], t: 0.0 }
    }

    /// Build from packed `z = [x.., y..]`.
    pub fn from_packed(z: &[f64], t: f64) -> Self {
        let nu = z.len() / 2;
        Self { x: z[..nu].to_vec(), y: z[nu..].to_vec(), t }
    }

    pub fn packed_z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.y);
        z
    }

    pub fn nu(&self) -> usize {
        self.x.len()
    }

    fn check_nu(&self, other: &HPoint) -> Result<()> {
        if self.nu() != other.nu() {
            return Err(Error::Domain(format!(
                "nu mismatch: {} vs {}",
                self.nu(),
                other.nu()
            )));
        }
        Ok(())
    }

    pub fn mul(&self, b: &HPoint) -> Result<HPoint> {
        self.check_nu(b)?;
        Ok(self.mul_unchecked(b))
    }

    pub(crate) fn mul_unchecked(&self, b: &HPoint) -> HPoint {
        let s = symplectic(&self.x, &self.y, &b.x, &b.y);
        HPoint {
            x: self.x.iter().zip(&b.x).map(|(p, q)| p + q).collect(),
            y: self.y.iter().zip(&b.y).map(|(p, q)| p + q).collect(),
            t: self.t + b.t + s,
        }
    }

    pub fn inv(&self) -> HPoint {
        HPoint {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            t: -self.t,
        }
    }

    pub fn dilate(&self, r: f64) -> Result<HPoint> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("dilation factor must be positive, got {r}")));
        }
        Ok(HPoint {
            x: self.x.iter().map(|v| r * v).collect(),
            y: self.y.iter().map(|v| r * v).collect(),
            t: r * r * self.t,
        })
    }

    /// `max(|x_j|, |y_j|, |t|^{1/2})`.
    pub fn gauge_norm(&self) -> f64 {
        let m = self
            .x
            .iter()
            .chain(self.y.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        m.max(self.t.abs().sqrt())
    }

    /// `(|z|^4 + 4 nu^2 t^2)^{1/4}`.
    pub fn koranyi_norm(&self) -> f64 {
        let nu = self.nu() as f64;
        let z2: f64 = self.x.iter().chain(self.y.iter()).map(|v| v * v).sum();
        (z2 * z2 + 4.0 * nu * nu * self.t * self.t).powf(0.25)
    }

    pub fn norm(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Gauge => self.gauge_norm(),
            Metric::Koranyi => self.koranyi_norm(),
        }
    }
}

/// `d(a, b) = ||b^{-1} a||`.
pub fn distance(a: &HPoint, b: &HPoint, metric: Metric) -> Result<f64> {
    Ok(b.inv().mul(a)?.norm(metric))
}

/// Gauge norm for packed `z` and `t`.
#[inline]
pub fn gauge_norm_packed(z: &[f64], t: f64) -> f64 {
    z.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(t.abs().sqrt())
}

/// Koranyi norm for packed `z` and `t`.
#[inline]
pub fn koranyi_norm_packed(z: &[f64], t: f64) -> f64 {
    let nu = (z.len() / 2) as f64;
    let z2: f64 = z.iter().map(|v| v * v).sum();
    (z2 * z2 + 4.0 * nu * nu * t * t).powf(0.25)
}
