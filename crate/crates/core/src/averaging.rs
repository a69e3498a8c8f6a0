//! Tube and interval averages on a grid via per-column prefix sums in t.
//!
//! Averages are taken over the grid samples lying in the set, so constants
//! average to themselves everywhere, including near the box faces.

use crate::fields::GridSpec;
use rayon::prelude::*;

/// Prefix sums of each t-column.
pub struct ColumnPrefix {
    n_t: usize,
    periodic: bool,
    prefix: Vec<f64>,
}

impl ColumnPrefix {
    pub fn new(spec: &GridSpec, vals: &[f64]) -> Self {
        let nt = spec.n_t;
        let ncol = spec.n_zpts();
        let mut prefix = vec![0.0; ncol * (nt + 1)];
        prefix.par_chunks_mut(nt + 1).enumerate().for_each(|(zi, p)| {
            let col = &vals[zi * nt..(zi + 1) * nt];
            let mut acc = 0.0;
            p[0] = 0.0;
            for k in 0..nt {
                acc += col[k];
                p[k + 1] = acc;
            }
        });
        Self { n_t: nt, periodic: spec.t_periodic, prefix }
    }

    #[inline]
    fn range(&self, zi: usize, a: usize, b: usize) -> f64 {
        // sum of col[a..b]
        let base = zi * (self.n_t + 1);
        self.prefix[base + b] - self.prefix[base + a]
    }

    /// Sum and sample count over integer indices `lo..=hi` of column `zi`.
    #[inline]
    pub fn interval(&self, zi: usize, lo: i64, hi: i64) -> (f64, f64) {
        if hi < lo {
            return (0.0, 0.0);
        }
        let n = self.n_t as i64;
        if self.periodic {
            let len = hi - lo + 1;
            let full = len / n;
            let rem = len % n;
            let start = lo.rem_euclid(n);
            let total = self.range(zi, 0, self.n_t);
            let mut s = full as f64 * total;
            if rem > 0 {
                let end = start + rem;
                if end <= n {
                    s += self.range(zi, start as usize, end as usize);
                } else {
                    s += self.range(zi, start as usize, self.n_t) + self.range(zi, 0, (end - n) as usize);
                }
            }
            (s, len as f64)
        } else {
            let a = lo.max(0);
            let b = hi.min(n - 1);
            if b < a {
                return (0.0, 0.0);
            }
            (self.range(zi, a as usize, (b + 1) as usize), (b - a + 1) as f64)
        }
    }
}

/// Integer sample indices `k` with `|k - c| < half` (open interval).
#[inline]
pub fn open_index_range(c: f64, half: f64) -> (i64, i64) {
    let lo = (c - half).floor() as i64 + 1;
    let hi = (c + half).ceil() as i64 - 1;
    (lo, hi)
}

/// Offsets `|i_a| < r / dz` in every z axis.
pub fn cube_offsets(spec: &GridSpec, r: f64) -> Vec<Vec<i64>> {
    let d = spec.zdim();
    let m = ((r / spec.dz()).ceil() as i64 - 1).max(0);
    let side = 2 * m + 1;
    let total = (side as usize).pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![0i64; d];
            for a in 0..d {
                v[a] = (idx % side as usize) as i64 - m;
                idx /= side as usize;
            }
            v
        })
        .collect()
}

/// Average of `vals` over the tube `g . B(o, r) . B2(0, s)` at every sample `g`.
pub fn tube_average(spec: &GridSpec, vals: &[f64], r: f64, s: f64) -> Vec<f64> {
    let pre = ColumnPrefix::new(spec, vals);
    tube_average_with(spec, &pre, r, s)
}

pub fn tube_average_with(spec: &GridSpec, pre: &ColumnPrefix, r: f64, s: f64) -> Vec<f64> {
    let nt = spec.n_t;
    let nu = spec.nu;
    let ratio = spec.shift_ratio();
    let half = (r * r + s) / spec.dt();
    let offs = cube_offsets(spec, r);
    let mut out = vec![0.0; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let zint = spec.z_ints(zi);
        let mut cols: Vec<(usize, f64)> = Vec::with_capacity(offs.len());
        let mut zp = vec![0i64; zint.len()];
        for off in &offs {
            for a in 0..zint.len() {
                zp[a] = zint[a] + off[a];
            }
            if let Some(zj) = spec.zi_from_ints(&zp) {
                let mut sy = 0i64;
                for j in 0..nu {
                    sy += zint[nu + j] * zp[j] - zint[j] * zp[nu + j];
                }
                cols.push((zj, sy as f64 * ratio));
            }
        }
        for (k, o) in col.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut cnt = 0.0;
            for &(zj, sh) in &cols {
                let (lo, hi) = open_index_range(k as f64 + sh, half);
                let (a, c) = pre.interval(zj, lo, hi);
                sum += a;
                cnt += c;
            }
            *o = if cnt > 0.0 { sum / cnt } else { 0.0 };
        }
    });
    out
}

/// Sum and sample count of the tube `g . B(o, r) . B2(0, s)` at the sample `(zi, k)`.
pub fn tube_sum_at(spec: &GridSpec, pre: &ColumnPrefix, zi: usize, k: usize, r: f64, s: f64) -> (f64, f64) {
    let nu = spec.nu;
    let ratio = spec.shift_ratio();
    let half = (r * r + s) / spec.dt();
    let m = ((r / spec.dz()).ceil() as i64 - 1).max(0);
    let zint = spec.z_ints(zi);
    let d = zint.len();
    let side = (2 * m + 1) as usize;
    let mut zp = vec![0i64; d];
    let (mut sum, mut cnt) = (0.0, 0.0);
    for mut idx in 0..side.pow(d as u32) {
        for a in 0..d {
            zp[a] = zint[a] + (idx % side) as i64 - m;
            idx /= side;
        }
        let Some(zj) = spec.zi_from_ints(&zp) else { continue };
        let mut sy = 0i64;
        for j in 0..nu {
            sy += zint[nu + j] * zp[j] - zint[j] * zp[nu + j];
        }
        let (lo, hi) = open_index_range(k as f64 + sy as f64 * ratio, half);
        let (a, c) = pre.interval(zj, lo, hi);
        sum += a;
        cnt += c;
    }
    (sum, cnt)
}

/// Average over the centred t-interval `(t - s, t + s)` at every sample.
pub fn interval_average(spec: &GridSpec, vals: &[f64], s: f64) -> Vec<f64> {
    if s <= 0.0 {
        return vals.to_vec();
    }
    let pre = ColumnPrefix::new(spec, vals);
    let nt = spec.n_t;
    let half = s / spec.dt();
    let mut out = vec![0.0; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        for (k, o) in col.iter_mut().enumerate() {
            let (lo, hi) = open_index_range(k as f64, half);
            let (a, c) = pre.interval(zi, lo, hi);
            *o = if c > 0.0 { a / c } else { 0.0 };
        }
    });
    out
}

/// Brute-force tube average by enumerating every sample; used as an oracle.
pub fn tube_average_bruteforce(spec: &GridSpec, vals: &[f64], r: f64, s: f64) -> Vec<f64> {
    let n = spec.len();
    let pts: Vec<(Vec<f64>, f64)> = (0..n).map(|i| spec.point(i)).collect();
    let period = 2.0 * spec.t_half;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (cz, ct) = &pts[i];
            let mut sum = 0.0;
            let mut cnt = 0.0;
            for (j, (z, t)) in pts.iter().enumerate() {
                if spec.t_periodic {
                    // count every periodic image inside the tube
                    let reach = ((r * r + s) / period).ceil() as i64 + 2;
                    for w in -reach..=reach {
                        if crate::tiling::tube_contains(cz, *ct, r, s, z, t + w as f64 * period) {
                            sum += vals[j];
                            cnt += 1.0;
                        }
                    }
                } else if crate::tiling::tube_contains(cz, *ct, r, s, z, *t) {
                    sum += vals[j];
                    cnt += 1.0;
                }
            }
            if cnt > 0.0 {
                sum / cnt
            } else {
                0.0
            }
        })
        .collect()
}

/// Range-maximum table over each t-column.
pub struct ColumnMax {
    n_t: usize,
    periodic: bool,
    levels: Vec<Vec<f64>>,
    col_max: Vec<f64>,
}

impl ColumnMax {
    pub fn new(spec: &GridSpec, vals: &[f64]) -> Self {
        let nt = spec.n_t;
        let mut levels = vec![vals.to_vec()];
        let mut w = 1;
        while 2 * w <= nt {
            let prev = levels.last().expect("level 0");
            let mut next = vec![f64::NEG_INFINITY; vals.len()];
            next.par_chunks_mut(nt).enumerate().for_each(|(zi, c)| {
                let p = &prev[zi * nt..(zi + 1) * nt];
                for k in 0..=(nt - 2 * w) {
                    c[k] = p[k].max(p[k + w]);
                }
            });
            levels.push(next);
            w *= 2;
        }
        let col_max = vals.chunks(nt).map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
        Self { n_t: nt, periodic: spec.t_periodic, levels, col_max }
    }

    #[inline]
    fn range(&self, zi: usize, a: usize, b: usize) -> f64 {
        // max of col[a..b], b > a
        let len = b - a;
        let lv = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let w = 1usize << lv;
        let base = zi * self.n_t;
        let l = &self.levels[lv];
        l[base + a].max(l[base + b - w])
    }

    /// Max over integer indices `lo..=hi` of column `zi`; `None` if empty.
    #[inline]
    pub fn interval(&self, zi: usize, lo: i64, hi: i64) -> Option<f64> {
        if hi < lo {
            return None;
        }
        let n = self.n_t as i64;
        if self.periodic {
            if hi - lo + 1 >= n {
                return Some(self.col_max[zi]);
            }
            let start = lo.rem_euclid(n);
            let end = start + (hi - lo + 1);
            if end <= n {
                Some(self.range(zi, start as usize, end as usize))
            } else {
                Some(self.range(zi, start as usize, self.n_t).max(self.range(zi, 0, (end - n) as usize)))
            }
        } else {
            let a = lo.max(0);
            let b = hi.min(n - 1);
            if b < a {
                None
            } else {
                Some(self.range(zi, a as usize, (b + 1) as usize))
            }
        }
    }
}

/// Maximum of `vals` over the tube `g . B(o, r) . B2(0, s)` at every sample.
pub fn tube_max(spec: &GridSpec, vals: &[f64], r: f64, s: f64) -> Vec<f64> {
    let table = ColumnMax::new(spec, vals);
    let nt = spec.n_t;
    let nu = spec.nu;
    let ratio = spec.shift_ratio();
    let half = (r * r + s) / spec.dt();
    let offs = cube_offsets(spec, r);
    let mut out = vec![0.0; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let zint = spec.z_ints(zi);
        let mut cols: Vec<(usize, f64)> = Vec::with_capacity(offs.len());
        let mut zp = vec![0i64; zint.len()];
        for off in &offs {
            for a in 0..zint.len() {
                zp[a] = zint[a] + off[a];
            }
            if let Some(zj) = spec.zi_from_ints(&zp) {
                let mut sy = 0i64;
                for j in 0..nu {
                    sy += zint[nu + j] * zp[j] - zint[j] * zp[nu + j];
                }
                cols.push((zj, sy as f64 * ratio));
            }
        }
        for (k, o) in col.iter_mut().enumerate() {
            let mut m = vals[zi * nt + k];
            for &(zj, sh) in &cols {
                let (lo, hi) = open_index_range(k as f64 + sh, half);
                if let Some(v) = table.interval(zj, lo, hi) {
                    m = m.max(v);
                }
            }
            *o = m;
        }
    });
    out
}
