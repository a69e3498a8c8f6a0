//! Joint spectral multipliers `m(L/|T|, iT)`: dyadic pieces, weighted kernel
//! norms and the two-parameter Sobolev norm they are compared with.

use crate::error::{Error, Result};
use crate::fields::{GridField, GridSet, GridSpec, C64};
use crate::group::{koranyi_norm_packed, symplectic_packed};
use crate::operators::Profile;
use crate::partition::eta;
use crate::spectral::{power_iteration, SpectralCalculus};
use crate::util::pairwise_sum;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// A function `m(x, lambda)` of `x = mu/|lambda| >= 0` and `lambda`.
#[derive(Clone)]
pub struct Multiplier2D {
    pub name: String,
    pub eval: Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>,
    /// Sobolev parameters, when known.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl fmt::Debug for Multiplier2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier2D").field("name", &self.name).finish()
    }
}

impl Multiplier2D {
    pub fn new<F: Fn(f64, f64) -> C64 + Send + Sync + 'static>(name: &str, f: F) -> Self {
        Self { name: name.into(), eval: Arc::new(f), alpha: None, beta: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::new("constant", move |_, _| C64::new(c, 0.0))
    }

    /// `x/(1+x) * lambda^2/(1+lambda^2)`.
    pub fn rational() -> Self {
        Self::new("rational", |x, l| C64::new(x / (1.0 + x) * l * l / (1.0 + l * l), 0.0))
    }

    /// `x^{i a} |lambda|^{i b}`.
    pub fn imaginary_power(a: f64, b: f64) -> Self {
        Self::new("imaginary_power", move |x, l| {
            if x <= 0.0 || l == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                C64::from_polar(1.0, a * x.ln() + b * l.abs().ln())
            }
        })
    }

    /// `e^{-x} cos(lambda)`: smooth but not dilation invariant.
    pub fn damped() -> Self {
        Self::new("damped", |x, l| C64::new((-x).exp() * l.cos(), 0.0))
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "constant" | "one" => Self::constant(1.0),
            "rational" => Self::rational(),
            "imaginary_power" => Self::imaginary_power(0.5, 1.0 / 3.0),
            "damped" => Self::damped(),
            _ => return Err(Error::Config(format!("unknown multiplier {name}"))),
        })
    }

    #[inline]
    pub fn at(&self, x: f64, lambda: f64) -> C64 {
        (self.eval)(x, lambda)
    }

    /// Supremum of `|m|` over the discrete fan of `calc`; errors on non-finite values.
    pub fn sup_on_spectrum(&self, calc: &SpectralCalculus) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for md in &calc.modes {
            if md.lambda == 0.0 {
                continue;
            }
            for &mu in &md.evals {
                let v = self.at(mu.max(0.0) / md.lambda.abs(), md.lambda);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::Numerical(format!("multiplier {} not finite at mu={mu}", self.name)));
                }
                sup = sup.max(v.norm());
            }
        }
        Ok(sup)
    }
}

/// `m(L/|T|, iT) f` with the `lambda = 0` fiber sent to zero.
pub fn apply_multiplier(calc: &SpectralCalculus, m: &Multiplier2D, f: &GridField) -> Result<GridField> {
    calc.spec.check_same(&f.spec)?;
    calc.apply_flag(f, |x, l| m.at(x, l))
}

/// Cut-off pair `(Psi1, Psi2)` used to localize a multiplier.
#[derive(Clone)]
pub struct PsiPair {
    pub psi1: Profile,
    pub psi2: Profile,
}

impl PsiPair {
    /// Both cut-offs equal to the dyadic partition bump `eta`.
    pub fn eta() -> Self {
        Self { psi1: Arc::new(eta), psi2: Arc::new(eta) }
    }

    /// Symbol `Psi1(2^{-j} x) Psi2(2^{-l} |lambda|)`.
    #[inline]
    pub fn symbol(&self, j: i32, ell: i32, x: f64, lambda: f64) -> f64 {
        (self.psi1)(x * 2f64.powi(-j)) * (self.psi2)(lambda.abs() * 2f64.powi(-ell))
    }
}

/// Kernel `K_{j,l}` of `m Psi1(2^{-j} L/|T|) Psi2(2^{-l} iT)`.
pub fn multiplier_piece(calc: &SpectralCalculus, m: &Multiplier2D, j: i32, ell: i32, psi: &PsiPair) -> Result<GridField> {
    calc.apply_flag(&GridField::delta(&calc.spec), |x, l| m.at(x, l) * psi.symbol(j, ell, x, l))
}

/// Pieces of `m` over a rectangle of `(j, l)`, applied to `f`.
pub fn multiplier_pieces_applied(
    calc: &SpectralCalculus,
    m: &Multiplier2D,
    f: &GridField,
    js: &[i32],
    ells: &[i32],
    psi: &PsiPair,
) -> Result<Vec<((i32, i32), GridField)>> {
    let c = calc.forward(f)?;
    let mut out = Vec::new();
    for &j in js {
        for &ell in ells {
            let g = calc.apply_coeffs(&c, |mu, l| {
                if l == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    let x = mu / l.abs();
                    m.at(x, l) * psi.symbol(j, ell, x, l)
                }
            })?;
            out.push(((j, ell), g));
        }
    }
    Ok(out)
}

/// Dyadic indices `j` with `eta(2^{-j} x)` nonzero somewhere on `[lo, hi]`.
pub fn dyadic_range(lo: f64, hi: f64) -> Vec<i32> {
    if !(lo > 0.0 && hi >= lo) {
        return Vec::new();
    }
    ((lo.log2().floor() as i32 - 1)..=(hi.log2().ceil() as i32 + 1)).collect()
}

/// Range of `x = mu/|lambda|` and `|lambda|` over the nonzero fibers of the spectrum.
pub fn flag_spectrum_range(calc: &SpectralCalculus) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, 0.0f64);
    let mut l = (f64::INFINITY, 0.0f64);
    for md in &calc.modes {
        if md.lambda == 0.0 {
            continue;
        }
        let a = md.lambda.abs();
        l = (l.0.min(a), l.1.max(a));
        for &mu in &md.evals {
            let v = mu.max(0.0) / a;
            if v > 0.0 {
                x = (x.0.min(v), x.1.max(v));
            }
        }
    }
    (x, l)
}

/// `2^{-nu(j+l)} (1 + 2^{j+l}|z|^2)^{nu(1+eps)} 2^{-l} (1 + 2^l |t|)^{1+eps}`.
pub fn mrs_weight(j: i32, ell: i32, eps: f64, spec: &GridSpec) -> Result<GridField> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let nu = spec.nu as f64;
    let a = 2f64.powi(j + ell);
    let b = 2f64.powi(ell);
    Ok(GridField::from_real_fn(spec, |z, t| {
        let z2: f64 = z.iter().map(|v| v * v).sum();
        (1.0 + a * z2).powf(nu * (1.0 + eps)) / a.powf(nu) * (1.0 + b * t.abs()).powf(1.0 + eps) / b
    }))
}

/// The two factors of [`mrs_weight`], in `z` and in `t`.
pub fn mrs_weight_factors(j: i32, ell: i32, eps: f64, spec: &GridSpec) -> Result<(GridField, GridField)> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let nu = spec.nu as f64;
    let a = 2f64.powi(j + ell);
    let b = 2f64.powi(ell);
    let w1 = GridField::from_real_fn(spec, |z, _| {
        let z2: f64 = z.iter().map(|v| v * v).sum();
        (1.0 + a * z2).powf(nu * (1.0 + eps)) / a.powf(nu)
    });
    let w2 = GridField::from_real_fn(spec, |_, t| (1.0 + b * t.abs()).powf(1.0 + eps) / b);
    Ok((w1, w2))
}

/// `(int |K|^2 w)^{1/2}`.
pub fn weighted_kernel_norm(k: &GridField, w: &GridField) -> Result<f64> {
    k.spec.check_same(&w.spec)?;
    let terms: Vec<f64> = k.values.par_iter().zip(w.values.par_iter()).map(|(a, b)| a.norm_sqr() * b.re).collect();
    let s = pairwise_sum(&terms);
    Ok((s * k.spec.dv()).sqrt())
}

/// Quadrature box for [`sobolev_norm`]: `n x n` samples of `[-L, L)^2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadSpec {
    pub half_width: f64,
    pub n: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { half_width: 4.0, n: 256 }
    }
}

/// `(iint (1+|xi1|)^alpha (1+|xi1|+|xi2|)^beta |m^(xi)|^2 dxi)^{1/2}` with the
/// unitary Fourier transform, by FFT on the quadrature box. The function must
/// vanish near the edges of the box; the relative change under halving the
/// sample count is checked.
pub fn sobolev_norm<F>(m: F, alpha: f64, beta: f64, quad: QuadSpec) -> Result<f64>
where
    F: Fn(f64, f64) -> C64 + Sync,
{
    let full = sobolev_raw(&m, alpha, beta, quad)?;
    let half = sobolev_raw(&m, alpha, beta, QuadSpec { n: quad.n / 2, ..quad })?;
    if full > 1e-300 && ((full - half) / full).abs() > 1e-3 {
        return Err(Error::Numerical(format!(
            "Sobolev quadrature unresolved: {half:e} at n={} vs {full:e} at n={}",
            quad.n / 2,
            quad.n
        )));
    }
    Ok(full)
}

/// [`sobolev_norm`] without the resolution check.
pub fn sobolev_raw<F>(m: &F, alpha: f64, beta: f64, quad: QuadSpec) -> Result<f64>
where
    F: Fn(f64, f64) -> C64 + Sync,
{
    let n = quad.n;
    let l = quad.half_width;
    if n < 4 || !(l > 0.0) {
        return Err(Error::Domain("quadrature box too small".into()));
    }
    let h = 2.0 * l / n as f64;
    let mut data: Vec<C64> = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (i / n, i % n);
            m(-l + a as f64 * h, -l + b as f64 * h)
        })
        .collect();
    if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("Sobolev integrand not finite".into()));
    }
    let mut edge: f64 = 0.0;
    for i in 0..n {
        for idx in [i, (n - 1) * n + i, i * n, i * n + n - 1] {
            edge = edge.max(data[idx].norm());
        }
    }
    let peak = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if edge > 1e-8 * peak.max(1e-300) {
        return Err(Error::Domain("function does not vanish on the quadrature box edge".into()));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    let mut col = vec![C64::new(0.0, 0.0); n];
    for b in 0..n {
        for a in 0..n {
            col[a] = data[a * n + b];
        }
        fft.process(&mut col);
        for a in 0..n {
            data[a * n + b] = col[a];
        }
    }
    // |m^| = h^2/(2 pi) |DFT| on the frequency grid of spacing 2 pi/(2L)
    let dxi = std::f64::consts::PI / l;
    let amp = h * h / (2.0 * std::f64::consts::PI);
    let freq = |k: usize| crate::spectral::signed_bin(k, n) as f64 * dxi;
    let total = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (i / n, i % n);
            let (x1, x2) = (freq(a).abs(), freq(b).abs());
            (1.0 + x1).powf(alpha) * (1.0 + x1 + x2).powf(beta) * (data[i] * amp).norm_sqr()
        })
        .collect::<Vec<f64>>();
    let total = pairwise_sum(&total);
    Ok((total * dxi * dxi).sqrt())
}

/// `eta(xi1) eta(|xi2|) m(r xi1, s xi2)`.
pub fn localized_dilate(m: &Multiplier2D, r: f64, s: f64) -> impl Fn(f64, f64) -> C64 + Sync + '_ {
    move |x1, x2| {
        let c = eta(x1) * eta(x2.abs());
        if c == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            m.at(r * x1, s * x2) * c
        }
    }
}

/// One row of the weighted-kernel / Sobolev comparison.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PieceRow {
    pub j: i32,
    pub ell: i32,
    pub weighted: f64,
    pub sobolev: f64,
    pub ratio: f64,
}

/// Weighted kernel norm of each `K_{j,l}` against the Sobolev norm of the
/// matching localized dilate, at `alpha = nu + eps`, `beta = (1 + eps)/2`.
pub fn weighted_vs_sobolev(
    calc: &SpectralCalculus,
    m: &Multiplier2D,
    js: &[i32],
    ells: &[i32],
    eps: f64,
    quad: QuadSpec,
) -> Result<Vec<PieceRow>> {
    let psi = PsiPair::eta();
    let alpha = calc.spec.nu as f64 + eps;
    let beta = (1.0 + eps) / 2.0;
    let mut rows = Vec::new();
    for &j in js {
        for &ell in ells {
            let k = multiplier_piece(calc, m, j, ell, &psi)?;
            let w = mrs_weight(j, ell, eps, &calc.spec)?;
            let weighted = weighted_kernel_norm(&k, &w)?;
            let sobolev = sobolev_norm(localized_dilate(m, 2f64.powi(j), 2f64.powi(ell)), alpha, beta, quad)?;
            let ratio = if sobolev > 0.0 { weighted / sobolev } else { 0.0 };
            rows.push(PieceRow { j, ell, weighted, sobolev, ratio });
        }
    }
    Ok(rows)
}

/// Result of an off-diagonal estimate.
#[derive(Clone, Debug, Serialize)]
pub struct OffDiagonal {
    pub norm: f64,
    pub gap: f64,
    /// `(2^{j/2} gap)^{-s}`; infinite when the sets touch.
    pub bound: f64,
    pub vacuous: bool,
}

/// Smallest Koranyi distance `|e^{-1} f|` between samples of two sets.
pub fn koranyi_gap(e: &GridSet, f: &GridSet) -> Result<f64> {
    e.spec.check_same(&f.spec)?;
    let spec = &e.spec;
    let pe: Vec<(Vec<f64>, f64)> = (0..spec.len()).filter(|&i| e.mask[i]).map(|i| spec.point(i)).collect();
    let pf: Vec<(Vec<f64>, f64)> = (0..spec.len()).filter(|&i| f.mask[i]).map(|i| spec.point(i)).collect();
    if pe.is_empty() || pf.is_empty() {
        return Err(Error::Domain("empty set".into()));
    }
    Ok(pe
        .par_iter()
        .map(|(ze, te)| {
            let neg: Vec<f64> = ze.iter().map(|v| -v).collect();
            let mut best = f64::INFINITY;
            let mut dz = vec![0.0; ze.len()];
            for (zf, tf) in &pf {
                for a in 0..dz.len() {
                    dz[a] = zf[a] - ze[a];
                }
                let dt = tf - te + symplectic_packed(&neg, zf);
                best = best.min(koranyi_norm_packed(&dz, dt));
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min))
}

/// Norm of `1_F eta(2^{-j} L) 1_E` by power iteration, with the bound value.
pub fn off_diagonal_check(
    calc: &SpectralCalculus,
    eta_piece: &(dyn Fn(f64) -> f64 + Sync),
    j: i32,
    e: &GridSet,
    f: &GridSet,
    s_order: f64,
    seed: u64,
) -> Result<OffDiagonal> {
    let gap = koranyi_gap(e, f)?;
    let scale = 2f64.powi(-j);
    let op = |v: &GridField, from: &GridSet, to: &GridSet| -> GridField {
        let g = calc.apply_real(&v.masked(&from.mask), |mu, _| eta_piece(scale * mu)).expect("bounded piece");
        g.masked(&to.mask)
    };
    let norm = power_iteration(&calc.spec, |v| op(v, e, f), |v| op(v, f, e), 60, seed);
    let vacuous = gap <= 0.0;
    let bound = if vacuous { f64::INFINITY } else { (2f64.powf(j as f64 / 2.0) * gap).powf(-s_order) };
    Ok(OffDiagonal { norm, gap, bound, vacuous })
}
