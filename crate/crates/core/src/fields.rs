//! Sampled functions on a box in H^nu, the two convolutions, stencils and norms.
//!
//! Grid nodes sit at `z_i = -Z + i dz` and `t_k = -T + k dt`, so the origin is a
//! node. Values are stored t-fastest: `index = zi * n_t + k`, where `zi` is the
//! row-major index over the axes `x_1..x_nu, y_1..y_nu`.

use crate::error::{Error, Result};
use crate::group::{symplectic_packed, HPoint};
use crate::util::pairwise_sum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Box grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub z_half: f64,
    pub t_half: f64,
    pub n_z: usize,
    pub n_t: usize,
    pub t_periodic: bool,
}

impl GridSpec {
    pub fn new(nu: usize, z_half: f64, t_half: f64, n_z: usize, n_t: usize, t_periodic: bool) -> Result<Self> {
        let s = Self { nu, z_half, t_half, n_z, n_t, t_periodic };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(Error::InvalidSpec("nu must be positive".into()));
        }
        if self.n_z < 4 || self.n_z % 2 != 0 || self.n_t < 4 || self.n_t % 2 != 0 {
            return Err(Error::InvalidSpec("n_z and n_t must be even and at least 4".into()));
        }
        if !(self.z_half > 0.0 && self.t_half > 0.0 && self.z_half.is_finite() && self.t_half.is_finite()) {
            return Err(Error::InvalidSpec("half extents must be positive".into()));
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.z_half / self.n_z as f64
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.t_half / self.n_t as f64
    }

    /// Volume of one cell.
    pub fn dv(&self) -> f64 {
        self.dz().powi(2 * self.nu as i32) * self.dt()
    }

    pub fn zdim(&self) -> usize {
        2 * self.nu
    }

    pub fn n_zpts(&self) -> usize {
        self.n_z.pow(self.zdim() as u32)
    }

    pub fn len(&self) -> usize {
        self.n_zpts() * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Box volume `(2Z)^{2nu} 2T`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.z_half).powi(self.zdim() as i32) * 2.0 * self.t_half
    }

    /// Integer offsets of `zi` relative to the origin node.
    pub fn z_ints(&self, zi: usize) -> Vec<i64> {
        let d = self.zdim();
        let mut out = vec![0i64; d];
        let mut r = zi;
        for a in (0..d).rev() {
            out[a] = (r % self.n_z) as i64 - (self.n_z / 2) as i64;
            r /= self.n_z;
        }
        out
    }

    pub fn z_coords(&self, zi: usize) -> Vec<f64> {
        let dz = self.dz();
        self.z_ints(zi).into_iter().map(|i| i as f64 * dz).collect()
    }

    pub fn t_coord(&self, k: usize) -> f64 {
        -self.t_half + k as f64 * self.dt()
    }

    /// Flat z index from centered integer offsets, if inside the box.
    pub fn zi_from_ints(&self, ints: &[i64]) -> Option<usize> {
        let half = (self.n_z / 2) as i64;
        let mut zi = 0usize;
        for &v in ints {
            let idx = v + half;
            if idx < 0 || idx >= self.n_z as i64 {
                return None;
            }
            zi = zi * self.n_z + idx as usize;
        }
        Some(zi)
    }

    /// Coordinates of sample `idx`.
    pub fn point(&self, idx: usize) -> (Vec<f64>, f64) {
        (self.z_coords(idx / self.n_t), self.t_coord(idx % self.n_t))
    }

    pub fn hpoint(&self, idx: usize) -> HPoint {
        let (z, t) = self.point(idx);
        HPoint::from_packed(&z, t)
    }

    /// `4 nu dz^2 / dt`: the t-shift (in samples) produced by one z-step per unit of the other coordinate.
    pub fn shift_ratio(&self) -> f64 {
        4.0 * self.nu as f64 * self.dz() * self.dz() / self.dt()
    }

    /// `Some(k)` when `4 nu dz^2 / dt = k` is an integer, i.e. the nodes form a subgroup lattice.
    pub fn lattice_ratio(&self) -> Option<i64> {
        let r = self.shift_ratio();
        let k = r.round();
        if (r - k).abs() < 1e-9 * r.max(1.0) {
            Some(k as i64)
        } else {
            None
        }
    }

    pub fn same_grid(&self, o: &GridSpec) -> bool {
        self.nu == o.nu
            && self.n_z == o.n_z
            && self.n_t == o.n_t
            && self.t_periodic == o.t_periodic
            && (self.z_half - o.z_half).abs() <= 1e-12 * self.z_half
            && (self.t_half - o.t_half).abs() <= 1e-12 * self.t_half
    }

    pub fn check_same(&self, o: &GridSpec) -> Result<()> {
        if self.same_grid(o) {
            Ok(())
        } else {
            Err(Error::SpecMismatch(format!("{self:?} vs {o:?}")))
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(s.as_bytes()))
    }

    /// Sample index of the node nearest to a point, if inside the box.
    pub fn nearest(&self, z: &[f64], t: f64) -> Option<usize> {
        let dz = self.dz();
        let ints: Vec<i64> = z.iter().map(|v| (v / dz).round() as i64).collect();
        let zi = self.zi_from_ints(&ints)?;
        let kf = ((t + self.t_half) / self.dt()).round() as i64;
        let k = if self.t_periodic {
            kf.rem_euclid(self.n_t as i64)
        } else if kf < 0 || kf >= self.n_t as i64 {
            return None;
        } else {
            kf
        };
        Some(zi * self.n_t + k as usize)
    }

    /// Samples whose finite-difference stencils stay inside the box.
    pub fn interior_mask(&self) -> Vec<bool> {
        let ratio = self.shift_ratio();
        let nu = self.nu;
        let mut out = vec![false; self.len()];
        for zi in 0..self.n_zpts() {
            let ints = self.z_ints(zi);
            let half = (self.n_z / 2) as i64;
            let zin = ints.iter().all(|&v| v + half >= 1 && v + half <= self.n_z as i64 - 2);
            if !zin {
                continue;
            }
            let maxshift = (0..nu)
                .map(|j| (ints[j].abs().max(ints[nu + j].abs())) as f64 * ratio)
                .fold(0.0f64, f64::max);
            let reach = maxshift.ceil() as i64 + 1;
            for k in 0..self.n_t {
                let ok = self.t_periodic || (k as i64 - reach >= 0 && k as i64 + reach < self.n_t as i64);
                out[zi * self.n_t + k] = ok;
            }
        }
        out
    }
}

/// Value of a t-column at fractional position `pos` (in samples).
#[inline]
pub(crate) fn column_at(col: &[C64], pos: f64, periodic: bool) -> C64 {
    let n = col.len() as i64;
    let fl = pos.floor();
    let frac = pos - fl;
    let i0 = fl as i64;
    let get = |i: i64| -> C64 {
        if periodic {
            col[i.rem_euclid(n) as usize]
        } else if i < 0 || i >= n {
            ZERO
        } else {
            col[i as usize]
        }
    };
    if frac < 1e-12 {
        get(i0)
    } else if frac > 1.0 - 1e-12 {
        get(i0 + 1)
    } else {
        get(i0) * (1.0 - frac) + get(i0 + 1) * frac
    }
}

/// A sampled complex function on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<C64>,
}

/// Which left-invariant field to differentiate along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorField {
    X(usize),
    Y(usize),
    T,
}

impl GridField {
    pub fn zeros(spec: &GridSpec) -> Self {
        Self { spec: spec.clone(), values: vec![ZERO; spec.len()] }
    }

    pub fn from_values(spec: &GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::SpecMismatch(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical("non-finite field value".into()));
        }
        Ok(Self { spec: spec.clone(), values })
    }

    pub fn from_real(spec: &GridSpec, values: &[f64]) -> Result<Self> {
        Self::from_values(spec, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Sample a function of `(z, t)` with packed `z`.
    pub fn from_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> C64 + Sync,
    {
        let nt = spec.n_t;
        let mut values = vec![ZERO; spec.len()];
        values.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
            let z = spec.z_coords(zi);
            for (k, v) in col.iter_mut().enumerate() {
                *v = f(&z, spec.t_coord(k));
            }
        });
        Self { spec: spec.clone(), values }
    }

    pub fn from_real_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Sync,
    {
        Self::from_fn(spec, |z, t| C64::new(f(z, t), 0.0))
    }

    /// Discrete delta at the origin node, scaled to unit mass.
    pub fn delta(spec: &GridSpec) -> Self {
        let mut f = Self::zeros(spec);
        let zi = spec.zi_from_ints(&vec![0; spec.zdim()]).expect("origin node");
        f.values[zi * spec.n_t + spec.n_t / 2] = C64::new(1.0 / spec.dv(), 0.0);
        f
    }

    pub fn column(&self, zi: usize) -> &[C64] {
        &self.values[zi * self.spec.n_t..(zi + 1) * self.spec.n_t]
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn map<F: Fn(C64) -> C64 + Sync>(&self, f: F) -> Self {
        Self { spec: self.spec.clone(), values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, o: &GridField) -> Result<Self> {
        self.spec.check_same(&o.spec)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(&o.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, o: &GridField) -> Result<Self> {
        self.spec.check_same(&o.spec)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn axpy(&mut self, a: C64, o: &GridField) {
        for (v, w) in self.values.iter_mut().zip(&o.values) {
            *v += a * w;
        }
    }

    pub fn mul_pointwise(&self, o: &GridField) -> Result<Self> {
        self.spec.check_same(&o.spec)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(&o.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Riemann sum of the field.
    pub fn integral(&self) -> C64 {
        let re: Vec<f64> = self.values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = self.values.iter().map(|v| v.im).collect();
        C64::new(pairwise_sum(&re), pairwise_sum(&im)) * self.spec.dv()
    }

    /// `<f, g> = sum f conj(g) dV`.
    pub fn inner(&self, o: &GridField) -> C64 {
        let prods: Vec<C64> = self.values.iter().zip(&o.values).map(|(a, b)| a * b.conj()).collect();
        crate::util::pairwise_sum_c(&prods) * self.spec.dv()
    }

    pub fn l2(&self) -> f64 {
        lp_norm(self, 2.0)
    }

    /// Zero the samples where `mask` is false.
    pub fn masked(&self, mask: &[bool]) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(mask).map(|(&v, &m)| if m { v } else { ZERO }).collect(),
        }
    }

    /// Right translate sample: `f(g . (h, 0))` at `(zi, k)` for a unit step.
    #[inline]
    fn right_step(&self, _zi: usize, k: usize, axis: usize, sign: i64, ints: &[i64], ratio: f64) -> C64 {
        let nu = self.spec.nu;
        let mut nb = ints.to_vec();
        nb[axis] += sign;
        let Some(nzi) = self.spec.zi_from_ints(&nb) else { return ZERO };
        // S(z, h) for h = sign * dz * e_axis, in units of dt
        let shift = if axis < nu {
            sign as f64 * ints[nu + axis] as f64 * ratio
        } else {
            -(sign as f64) * ints[axis - nu] as f64 * ratio
        };
        column_at(self.column(nzi), k as f64 + shift, self.spec.t_periodic)
    }

    /// Interpolated value at an arbitrary point (multilinear, zero outside the box).
    pub fn interp(&self, z: &[f64], t: f64) -> C64 {
        let spec = &self.spec;
        let d = spec.zdim();
        let dz = spec.dz();
        let mut base = vec![0i64; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let p = z[a] / dz;
            let fl = p.floor();
            base[a] = fl as i64;
            frac[a] = p - fl;
        }
        let tp = (t + spec.t_half) / spec.dt();
        let mut acc = ZERO;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut ints = base.clone();
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    ints[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            if let Some(zi) = spec.zi_from_ints(&ints) {
                acc += column_at(self.column(zi), tp, spec.t_periodic) * w;
            }
        }
        acc
    }
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &GridField, p: f64) -> f64 {
    if p.is_infinite() {
        return f.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    }
    let pw: Vec<f64> = f.values.iter().map(|v| v.norm().powf(p)).collect();
    (pairwise_sum(&pw) * f.spec.dv()).powf(1.0 / p)
}

/// Left-invariant centered difference along a horizontal or central field.
pub fn vector_field(f: &GridField, which: VectorField) -> GridField {
    let spec = &f.spec;
    let nt = spec.n_t;
    let ratio = spec.shift_ratio();
    let dz = spec.dz();
    let dt = spec.dt();
    let nu = spec.nu;
    let mut out = vec![ZERO; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let ints = spec.z_ints(zi);
        for (k, v) in col.iter_mut().enumerate() {
            *v = match which {
                VectorField::X(j) | VectorField::Y(j) => {
                    let axis = if let VectorField::X(_) = which { j } else { nu + j };
                    let fp = f.right_step(zi, k, axis, 1, &ints, ratio);
                    let fm = f.right_step(zi, k, axis, -1, &ints, ratio);
                    (fp - fm) / (2.0 * dz)
                }
                VectorField::T => {
                    let c = f.column(zi);
                    (column_at(c, k as f64 + 1.0, spec.t_periodic) - column_at(c, k as f64 - 1.0, spec.t_periodic))
                        / (2.0 * dt)
                }
            };
        }
    });
    GridField { spec: spec.clone(), values: out }
}

/// Discrete sub-Laplacian `sum_j [2 f(g) - f(g h_j) - f(g h_j^{-1})] / dz^2` over the `2 nu` unit steps.
pub fn sublaplacian(f: &GridField) -> GridField {
    let spec = &f.spec;
    let nt = spec.n_t;
    let ratio = spec.shift_ratio();
    let inv = 1.0 / (spec.dz() * spec.dz());
    let d = spec.zdim();
    let mut out = vec![ZERO; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let ints = spec.z_ints(zi);
        let own = f.column(zi);
        for (k, v) in col.iter_mut().enumerate() {
            let mut acc = own[k] * (2.0 * d as f64);
            for axis in 0..d {
                acc -= f.right_step(zi, k, axis, 1, &ints, ratio);
                acc -= f.right_step(zi, k, axis, -1, &ints, ratio);
            }
            *v = acc * inv;
        }
    });
    GridField { spec: spec.clone(), values: out }
}

/// Central Laplacian `-T^2` by the compact second difference in t.
pub fn central_laplacian(f: &GridField) -> GridField {
    let spec = &f.spec;
    let nt = spec.n_t;
    let inv = 1.0 / (spec.dt() * spec.dt());
    let mut out = vec![ZERO; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let c = f.column(zi);
        for (k, v) in col.iter_mut().enumerate() {
            let kp = column_at(c, k as f64 + 1.0, spec.t_periodic);
            let km = column_at(c, k as f64 - 1.0, spec.t_periodic);
            *v = (c[k] * 2.0 - kp - km) * inv;
        }
    });
    GridField { spec: spec.clone(), values: out }
}

/// `(f *_1 k)(g) = sum_{g1} f(g1) k(g1^{-1} g) dV`, direct summation.
pub fn conv1(f: &GridField, k: &GridField) -> Result<GridField> {
    f.spec.check_same(&k.spec)?;
    let spec = &f.spec;
    let nt = spec.n_t;
    let nz = spec.n_zpts();
    let ratio = spec.shift_ratio();
    let dv = spec.dv();
    let half_t = (nt / 2) as f64;
    let ints_all: Vec<Vec<i64>> = (0..nz).map(|zi| spec.z_ints(zi)).collect();
    let support: Vec<usize> = (0..nz).filter(|&z1| f.column(z1).iter().any(|v| *v != ZERO)).collect();
    let mut out = vec![ZERO; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let zint = &ints_all[zi];
        let mut diff = vec![0i64; zint.len()];
        for &z1 in &support {
            let z1int = &ints_all[z1];
            for a in 0..diff.len() {
                diff[a] = zint[a] - z1int[a];
            }
            let Some(kz) = spec.zi_from_ints(&diff) else { continue };
            let s = symplectic_packed(
                &z1int.iter().map(|&v| v as f64).collect::<Vec<_>>(),
                &zint.iter().map(|&v| v as f64).collect::<Vec<_>>(),
            ) / (4.0 * spec.nu as f64)
                * ratio;
            let kc = k.column(kz);
            let fc = f.column(z1);
            for (kk, o) in col.iter_mut().enumerate() {
                let mut acc = ZERO;
                for (k1, fv) in fc.iter().enumerate() {
                    if *fv == ZERO {
                        continue;
                    }
                    let pos = kk as f64 - k1 as f64 - s + half_t;
                    acc += fv * column_at(kc, pos, spec.t_periodic);
                }
                *o += acc * dv;
            }
        }
    });
    Ok(GridField { spec: spec.clone(), values: out })
}

/// `conv1` through the t-axis FFT; requires a periodic, lattice-compatible grid.
pub fn conv1_fft(f: &GridField, k: &GridField) -> Result<GridField> {
    f.spec.check_same(&k.spec)?;
    let spec = &f.spec;
    if !spec.t_periodic {
        return Err(Error::SpecMismatch("fast conv1 needs a periodic t axis".into()));
    }
    let ratio = spec
        .lattice_ratio()
        .ok_or_else(|| Error::SpecMismatch("fast conv1 needs 4 nu dz^2 / dt integral".into()))?;
    let nt = spec.n_t;
    let nz = spec.n_zpts();
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nt);
    let bwd = planner.plan_fft_inverse(nt);
    let fhat: Vec<Vec<C64>> = (0..nz)
        .map(|zi| {
            let mut c = f.column(zi).to_vec();
            fwd.process(&mut c);
            c
        })
        .collect();
    // kernel recentred so index 0 is t = 0
    let khat: Vec<Vec<C64>> = (0..nz)
        .map(|zi| {
            let src = k.column(zi);
            let mut c: Vec<C64> = (0..nt).map(|j| src[(j + nt / 2) % nt]).collect();
            fwd.process(&mut c);
            c
        })
        .collect();
    let ints_all: Vec<Vec<i64>> = (0..nz).map(|zi| spec.z_ints(zi)).collect();
    let dv = spec.dv();
    let mut out = vec![ZERO; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let zint = &ints_all[zi];
        let mut acc = vec![ZERO; nt];
        let mut diff = vec![0i64; zint.len()];
        for z1 in 0..nz {
            let z1int = &ints_all[z1];
            for a in 0..diff.len() {
                diff[a] = zint[a] - z1int[a];
            }
            let Some(kz) = spec.zi_from_ints(&diff) else { continue };
            let nu = spec.nu;
            let mut s = 0i64;
            for j in 0..nu {
                s += z1int[nu + j] * zint[j] - z1int[j] * zint[nu + j];
            }
            let shift = s * ratio;
            let fh = &fhat[z1];
            let kh = &khat[kz];
            for m in 0..nt {
                let ph = -2.0 * std::f64::consts::PI * (m as f64) * (shift.rem_euclid(nt as i64) as f64) / nt as f64;
                acc[m] += fh[m] * kh[m] * C64::from_polar(1.0, ph);
            }
        }
        bwd.process(&mut acc);
        for (o, a) in col.iter_mut().zip(acc) {
            *o = a * (dv / nt as f64);
        }
    });
    Ok(GridField { spec: spec.clone(), values: out })
}

/// Samples of a function on a line in the centre.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub half_extent: f64,
    pub n: usize,
    pub values: Vec<C64>,
    /// Whether the line wraps with period `2 * half_extent`.
    pub periodic: bool,
}

impl Line {
    pub fn new(half_extent: f64, n: usize, values: Vec<C64>, periodic: bool) -> Result<Self> {
        if n % 2 != 0 || values.len() != n || !(half_extent > 0.0) {
            return Err(Error::InvalidSpec("line needs even n matching values and positive extent".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical("non-finite line value".into()));
        }
        Ok(Self { half_extent, n, values, periodic })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(half_extent: f64, n: usize, periodic: bool, f: F) -> Result<Self> {
        let dt = 2.0 * half_extent / n as f64;
        let vals = (0..n).map(|i| C64::new(f(-half_extent + i as f64 * dt), 0.0)).collect();
        Self::new(half_extent, n, vals, periodic)
    }

    /// The line matching the t-axis of a grid.
    pub fn for_spec<F: Fn(f64) -> f64>(spec: &GridSpec, f: F) -> Line {
        Self::from_fn(spec.t_half, spec.n_t, spec.t_periodic, f).expect("grid t axis is a valid line")
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.dt()
    }

    pub fn mass(&self) -> f64 {
        let re: Vec<f64> = self.values.iter().map(|v| v.re).collect();
        pairwise_sum(&re) * self.dt()
    }
}

/// `(f *_2 k)(z, t) = sum_u f(z, t - u) k(u) dt`.
pub fn conv2(f: &GridField, k: &Line) -> Result<GridField> {
    let spec = &f.spec;
    if (k.dt() - spec.dt()).abs() > 1e-12 * spec.dt() {
        return Err(Error::SpecMismatch(format!("line step {} vs grid step {}", k.dt(), spec.dt())));
    }
    let nt = spec.n_t;
    let half = (k.n / 2) as i64;
    let taps: Vec<(i64, C64)> = k
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != ZERO)
        .map(|(i, v)| (i as i64 - half, *v))
        .collect();
    let dt = spec.dt();
    let mut out = vec![ZERO; spec.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let c = f.column(zi);
        for (kk, o) in col.iter_mut().enumerate() {
            let mut acc = ZERO;
            for &(u, w) in &taps {
                let src = kk as i64 - u;
                let v = if spec.t_periodic {
                    c[src.rem_euclid(nt as i64) as usize]
                } else if src < 0 || src >= nt as i64 {
                    continue;
                } else {
                    c[src as usize]
                };
                acc += v * w;
            }
            *o = acc * dt;
        }
    });
    Ok(GridField { spec: spec.clone(), values: out })
}

/// `(_g f)(g') = f(g^{-1} g')`, resampled by multilinear interpolation.
pub fn translate_field(f: &GridField, g: &HPoint) -> GridField {
    let gz = g.packed_z();
    let gt = g.t;
    let nu = f.spec.nu;
    GridField::from_fn(&f.spec, |z, t| {
        let w: Vec<f64> = z.iter().zip(&gz).map(|(a, b)| a - b).collect();
        let mut s = 0.0;
        for j in 0..nu {
            s += gz[nu + j] * z[j] - gz[j] * z[nu + j];
        }
        f.interp(&w, t - gt - 4.0 * nu as f64 * s)
    })
}

/// Normalized dilate `f_r = r^{-D} f o delta_{1/r}`.
pub fn dilate_field(f: &GridField, r: f64) -> Result<GridField> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("dilation factor must be positive, got {r}")));
    }
    let d = (2 * f.spec.nu + 2) as i32;
    let c = r.powi(-d);
    Ok(GridField::from_fn(&f.spec, |z, t| {
        let w: Vec<f64> = z.iter().map(|v| v / r).collect();
        f.interp(&w, t / (r * r)) * c
    }))
}

/// Boolean sample set on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    pub spec: GridSpec,
    pub mask: Vec<bool>,
}

impl GridSet {
    pub fn new(spec: &GridSpec, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != spec.len() {
            return Err(Error::SpecMismatch("mask length".into()));
        }
        Ok(Self { spec: spec.clone(), mask })
    }

    pub fn empty(spec: &GridSpec) -> Self {
        Self { spec: spec.clone(), mask: vec![false; spec.len()] }
    }

    pub fn from_fn<F: Fn(&[f64], f64) -> bool + Sync>(spec: &GridSpec, f: F) -> Self {
        let nt = spec.n_t;
        let mut mask = vec![false; spec.len()];
        mask.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
            let z = spec.z_coords(zi);
            for (k, m) in col.iter_mut().enumerate() {
                *m = f(&z, spec.t_coord(k));
            }
        });
        Self { spec: spec.clone(), mask }
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.spec.dv()
    }

    pub fn union(&self, o: &GridSet) -> GridSet {
        GridSet { spec: self.spec.clone(), mask: self.mask.iter().zip(&o.mask).map(|(a, b)| *a || *b).collect() }
    }

    pub fn indicator(&self) -> GridField {
        GridField {
            spec: self.spec.clone(),
            values: self.mask.iter().map(|&m| if m { C64::new(1.0, 0.0) } else { ZERO }).collect(),
        }
    }

    pub fn write_hfld(&self, path: &Path) -> Result<()> {
        self.indicator().write_hfld(path)
    }
}

/// Header line of a `.hfld` file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HfldHeader {
    pub version: u32,
    pub nu: usize,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub n_z: usize,
    pub n_t: usize,
    pub t_periodic: bool,
    pub dtype: String,
    pub layout: String,
}

impl GridField {
    /// Serialize as a JSON header line followed by a little-endian payload.
    pub fn to_hfld_bytes(&self) -> Vec<u8> {
        let real = self.is_real();
        let header = HfldHeader {
            version: 1,
            nu: self.spec.nu,
            z: self.spec.z_half,
            t: self.spec.t_half,
            n_z: self.spec.n_z,
            n_t: self.spec.n_t,
            t_periodic: self.spec.t_periodic,
            dtype: if real { "f64".into() } else { "c128".into() },
            layout: "t-fastest".into(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            if !real {
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_hfld_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Config("missing header line".into()))?;
        let header: HfldHeader = serde_json::from_slice(&bytes[..nl])?;
        if header.layout != "t-fastest" {
            return Err(Error::Config(format!("unsupported layout {}", header.layout)));
        }
        let spec = GridSpec::new(header.nu, header.z, header.t, header.n_z, header.n_t, header.t_periodic)?;
        let payload = &bytes[nl + 1..];
        let width = match header.dtype.as_str() {
            "f64" => 8,
            "c128" => 16,
            other => return Err(Error::Config(format!("unsupported dtype {other}"))),
        };
        if payload.len() != width * spec.len() {
            return Err(Error::Config(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                width * spec.len()
            )));
        }
        let rd = |i: usize| f64::from_le_bytes(payload[i..i + 8].try_into().expect("8 bytes"));
        let values = (0..spec.len())
            .map(|i| if width == 8 { C64::new(rd(8 * i), 0.0) } else { C64::new(rd(16 * i), rd(16 * i + 8)) })
            .collect();
        GridField::from_values(&spec, values)
    }

    pub fn write_hfld(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_hfld_bytes())?;
        Ok(())
    }

    pub fn read_hfld(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_hfld_bytes(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap()
    }

    #[test]
    fn coordinates() {
        let s = spec();
        assert_eq!(s.dz(), 0.5);
        assert_eq!(s.dt(), 0.5);
        assert_eq!(s.lattice_ratio(), Some(2));
        let zi = s.zi_from_ints(&[0, 0]).unwrap();
        assert_eq!(s.z_coords(zi), vec![0.0, 0.0]);
        assert_eq!(s.t_coord(8), 0.0);
        assert!(GridSpec::new(1, 1.0, 1.0, 5, 8, true).is_err());
    }

    #[test]
    fn x_derivative_of_coordinate() {
        let s = spec();
        let f = GridField::from_real_fn(&s, |z, _| z[0]);
        let d = vector_field(&f, VectorField::X(0));
        let mask = s.interior_mask();
        for (i, v) in d.values.iter().enumerate() {
            if mask[i] {
                assert!((v.re - 1.0).abs() < 1e-12);
            }
        }
        let c = GridField::from_real_fn(&s, |_, _| 3.0);
        let dc = vector_field(&c, VectorField::Y(0));
        for (i, v) in dc.values.iter().enumerate() {
            if mask[i] {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hfld_roundtrip() {
        let s = spec();
        let f = GridField::from_fn(&s, |z, t| C64::new(z[0] + 0.1 * t, z[1].sin()));
        let g = GridField::from_hfld_bytes(&f.to_hfld_bytes()).unwrap();
        assert_eq!(f, g);
        let r = GridField::from_real_fn(&s, |z, t| z[0] * t);
        let bytes = r.to_hfld_bytes();
        assert!(String::from_utf8_lossy(&bytes[..100]).contains("\"f64\""));
        assert_eq!(GridField::from_hfld_bytes(&bytes).unwrap(), r);
    }

    #[test]
    fn box_indicator_norms() {
        let s = GridSpec::new(1, 2.0, 4.0, 8, 16, false).unwrap();
        let set = GridSet::from_fn(&s, |z, t| z[0].abs() < 0.9 && z[1].abs() < 0.9 && t.abs() < 1.9);
        let f = set.indicator();
        let vol = set.measure();
        assert!((lp_norm(&f, 1.0) - vol).abs() < 1e-12);
        assert!((lp_norm(&f, 2.0) - vol.sqrt()).abs() < 1e-12);
        assert_eq!(lp_norm(&f, f64::INFINITY), 1.0);
    }
}
