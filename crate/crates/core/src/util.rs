//! Small numeric helpers shared across modules.

use num_complex::Complex64;

/// Pairwise summation; deterministic for a fixed input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if v.len() <= BLOCK {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Pairwise sum of a mapped sequence.
pub fn pairwise_sum_by<T, F: Fn(&T) -> f64>(v: &[T], f: F) -> f64 {
    let mapped: Vec<f64> = v.iter().map(f).collect();
    pairwise_sum(&mapped)
}

/// Complex pairwise sum.
pub fn pairwise_sum_c(v: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 64;
    if v.len() <= BLOCK {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum_c(&v[..mid]) + pairwise_sum_c(&v[mid..])
}

/// Floor division with a tolerance snap for values within `eps` of an integer.
pub fn snap_round(x: f64, eps: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= eps {
        Some(r as i64)
    } else {
        None
    }
}

/// Centered remainder: `n = q * m + r` with `r` in `[-(m-1)/2, (m-1)/2]` for odd `m`.
pub fn centered_divmod(n: i64, m: i64) -> (i64, i64) {
    let half = (m - 1) / 2;
    let q = (n + half).div_euclid(m);
    (q, n - q * m)
}

/// Least-squares line fit `y = a + b x`; returns `(a, b, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}
