//! Hardy-norm functionals on grid fields: maximal functions, square and area
//! functions, Riesz transforms and the central Hilbert transform.
//!
//! Suprema over `(r, s)` run over a finite [`ScaleGrid`]. Convolutions with
//! smooth kernels `phi_{r,s}` are evaluated through the spectral calculus, with
//! `phi^(1)_r` acting as `h1(r sqrt(L))` and `phi^(2)_s` as `h2(s |T|)`.

use crate::averaging::{interval_average, tube_average_with, tube_max, ColumnPrefix};
use crate::error::{Error, Result};
use crate::fields::{vector_field, GridField, GridSpec, VectorField, C64};
use crate::group::gauge_norm_packed;
use crate::partition::psi;
use crate::spectral::{apply_t_multiplier, signed_bin, Coeffs, SpectralCalculus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Finite set of scale pairs `(r, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub r_values: Vec<f64>,
    pub s_values: Vec<f64>,
}

/// Extremes of a scale grid, logged with every result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleBand {
    pub r_min: f64,
    pub r_max: f64,
    pub s_min: f64,
    pub s_max: f64,
}

fn clean(mut v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Domain(format!("{what} scales must be a nonempty list of positive numbers")));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn dyadic_between(lo: f64, hi: f64) -> Vec<f64> {
    let a = lo.log2().ceil() as i32;
    let b = hi.log2().floor() as i32;
    let v: Vec<f64> = (a..=b).map(|j| 2f64.powi(j)).collect();
    if v.is_empty() {
        vec![lo]
    } else {
        v
    }
}

impl ScaleGrid {
    pub fn new(r_values: Vec<f64>, s_values: Vec<f64>) -> Result<Self> {
        Ok(Self { r_values: clean(r_values, "r")?, s_values: clean(s_values, "s")? })
    }

    /// `r = 2^j`, `s = 2^k` over inclusive ranges.
    pub fn dyadic(j_min: i32, j_max: i32, k_min: i32, k_max: i32) -> Result<Self> {
        Self::new((j_min..=j_max).map(|j| 2f64.powi(j)).collect(), (k_min..=k_max).map(|k| 2f64.powi(k)).collect())
    }

    /// Geometric grid with `per_octave` points per factor of two.
    pub fn log_grid(r_lo: f64, r_hi: f64, s_lo: f64, s_hi: f64, per_octave: usize) -> Result<Self> {
        if per_octave == 0 || !(r_lo > 0.0 && r_hi >= r_lo && s_lo > 0.0 && s_hi >= s_lo) {
            return Err(Error::Domain("invalid log grid".into()));
        }
        let k = per_octave as f64;
        let mk = |lo: f64, hi: f64| {
            let n = ((hi / lo).log2() * k).round() as i64;
            (0..=n).map(|i| lo * 2f64.powf(i as f64 / k)).collect::<Vec<_>>()
        };
        Self::new(mk(r_lo, r_hi), mk(s_lo, s_hi))
    }

    /// Dyadic scales resolvable on `spec`: `r` in `[2 dz, Z]`, `s` in `[2 dt, T]`.
    pub fn for_spec(spec: &GridSpec) -> Self {
        Self {
            r_values: dyadic_between(2.0 * spec.dz(), spec.z_half),
            s_values: dyadic_between(2.0 * spec.dt(), spec.t_half),
        }
    }

    /// Dyadic grid whose partition pieces `psi(r sqrt(mu)) psi(s |lambda|)` cover
    /// every eigenpair of `calc` with `lambda != 0`.
    pub fn covering(calc: &SpectralCalculus) -> Self {
        let mut mu_lo = f64::INFINITY;
        let mut mu_hi: f64 = 0.0;
        let mut l_lo = f64::INFINITY;
        let mut l_hi: f64 = 0.0;
        for m in &calc.modes {
            if m.lambda == 0.0 {
                continue;
            }
            l_lo = l_lo.min(m.lambda.abs());
            l_hi = l_hi.max(m.lambda.abs());
            for &e in &m.evals {
                mu_lo = mu_lo.min(e.max(1e-300));
                mu_hi = mu_hi.max(e);
            }
        }
        // psi(2^m x) pieces with m in [a, b] cover x in [2^-b, 2^-a]
        let span = |lo: f64, hi: f64| ((-hi.log2()).floor() as i32, (-lo.log2()).ceil() as i32);
        let (ja, jb) = span(mu_lo.sqrt(), mu_hi.sqrt());
        let (ka, kb) = span(l_lo, l_hi);
        Self::dyadic(ja, jb, ka, kb).expect("nonempty dyadic ranges")
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.r_values.iter().flat_map(|&r| self.s_values.iter().map(move |&s| (r, s))).collect()
    }

    pub fn len(&self) -> usize {
        self.r_values.len() * self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn band(&self) -> ScaleBand {
        ScaleBand {
            r_min: self.r_values[0],
            r_max: *self.r_values.last().expect("nonempty"),
            s_min: self.s_values[0],
            s_max: *self.s_values.last().expect("nonempty"),
        }
    }

    pub fn is_subset_of(&self, o: &ScaleGrid) -> bool {
        self.r_values.iter().all(|r| o.r_values.contains(r)) && self.s_values.iter().all(|s| o.s_values.contains(s))
    }

    /// Quadrature weights for `dr/r` and `ds/s`.
    pub fn log_weights(&self) -> (Vec<f64>, Vec<f64>) {
        (log_weights(&self.r_values), log_weights(&self.s_values))
    }
}

fn log_weights(v: &[f64]) -> Vec<f64> {
    if v.len() == 1 {
        return vec![std::f64::consts::LN_2];
    }
    (0..v.len()).map(|i| if i + 1 < v.len() { (v[i + 1] / v[i]).ln() } else { (v[i] / v[i - 1]).ln() }).collect()
}

/// Aperture of the cone `g . B(o, beta r) . B2(0, beta^2 s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub beta: f64,
}

impl ConeSpec {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain("cone aperture must be positive".into()));
        }
        Ok(Self { beta })
    }

    /// Whether `(z, t)` lies in the cone tube over `(cz, ct)` at scale `(r, s)`.
    pub fn contains(&self, cz: &[f64], ct: f64, r: f64, s: f64, z: &[f64], t: f64) -> bool {
        crate::tiling::tube_contains(cz, ct, self.beta * r, self.beta * self.beta * s, z, t)
    }
}

impl Default for ConeSpec {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A pair `(phi^(1), phi^(2))` given by radial profiles of their spectral symbols.
#[derive(Clone)]
pub struct FilterPair {
    pub name: String,
    pub h1: Profile,
    pub h2: Profile,
}

impl fmt::Debug for FilterPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterPair").field("name", &self.name).finish()
    }
}

impl FilterPair {
    pub fn new<A, B>(name: &str, h1: A, h2: B) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.to_string(), h1: Arc::new(h1), h2: Arc::new(h2) }
    }

    /// `(p_r, p_s)`: `e^{-r sqrt(L)}` and `e^{-s |T|}`.
    pub fn flag_poisson() -> Self {
        Self::new("flag_poisson", |x| (-x).exp(), |y| (-y).exp())
    }

    /// Square-root dyadic partition in both variables.
    pub fn partition() -> Self {
        Self::new("partition", psi, psi)
    }

    /// Partition pair normalised for `dr/r ds/s` integration.
    pub fn partition_cts() -> Self {
        let c = 1.0 / std::f64::consts::LN_2.sqrt();
        Self::new("partition_cts", move |x| c * psi(x), move |y| c * psi(y))
    }

    /// Gaussian pair `e^{-r^2 L} , e^{-s^2 T^2}`.
    pub fn gaussian() -> Self {
        Self::new("gaussian", |x| (-x * x).exp(), |y| (-y * y).exp())
    }

    /// Symbol of `phi_{r,s}` at the joint eigenvalue `(mu, lambda)`.
    #[inline]
    pub fn symbol(&self, r: f64, s: f64, mu: f64, lambda: f64) -> f64 {
        (self.h1)(r * mu.max(0.0).sqrt()) * (self.h2)(s * lambda.abs())
    }

    /// Convolution kernel `phi_{r,s}` sampled on the calculus grid.
    pub fn kernel(&self, calc: &SpectralCalculus, r: f64, s: f64) -> Result<GridField> {
        calc.apply_real(&GridField::delta(&calc.spec), |mu, l| self.symbol(r, s, mu, l))
    }
}

/// `f *_1 phi_{r,s}` from precomputed coefficients.
pub fn pair_response(calc: &SpectralCalculus, c: &Coeffs, pair: &FilterPair, r: f64, s: f64) -> Result<GridField> {
    calc.apply_coeffs(c, |mu, l| C64::new(pair.symbol(r, s, mu, l), 0.0))
}

/// Flag maximal function: sup over scales of tube averages of `|f|`.
pub fn flag_maximal(f: &GridField, scales: &ScaleGrid) -> GridField {
    let spec = &f.spec;
    let a = f.abs();
    let pre = ColumnPrefix::new(spec, &a);
    let mut best = vec![0.0f64; spec.len()];
    for (r, s) in scales.pairs() {
        let avg = tube_average_with(spec, &pre, r, s);
        best.par_iter_mut().zip(avg.par_iter()).for_each(|(b, v)| *b = b.max(*v));
    }
    real_field(spec, best)
}

/// Iterated maximal function: sup over scales of `|f| *_1 chi_r *_2 chi_s`.
pub fn iterated_maximal(f: &GridField, scales: &ScaleGrid) -> GridField {
    let spec = &f.spec;
    let a = f.abs();
    let pre = ColumnPrefix::new(spec, &a);
    let mut best = vec![0.0f64; spec.len()];
    for &r in &scales.r_values {
        let ball = tube_average_with(spec, &pre, r, 0.0);
        for &s in &scales.s_values {
            let avg = interval_average(spec, &ball, s);
            best.par_iter_mut().zip(avg.par_iter()).for_each(|(b, v)| *b = b.max(*v));
        }
    }
    real_field(spec, best)
}

fn real_field(spec: &GridSpec, v: Vec<f64>) -> GridField {
    GridField { spec: spec.clone(), values: v.into_iter().map(|x| C64::new(x, 0.0)).collect() }
}

/// Radial maximal function `u+ = sup |f *_1 p_{r,s}|`.
pub fn radial_maximal(f: &GridField, calc: &SpectralCalculus, scales: &ScaleGrid) -> Result<GridField> {
    grand_maximal_unchecked(f, calc, &[GrandMember::new(FilterPair::flag_poisson(), 0.0)], scales)
}

/// Nontangential maximal function over the cone of aperture `cone.beta`.
pub fn nontangential_maximal(
    f: &GridField,
    calc: &SpectralCalculus,
    cone: ConeSpec,
    scales: &ScaleGrid,
) -> Result<GridField> {
    grand_maximal_unchecked(f, calc, &[GrandMember::new(FilterPair::flag_poisson(), cone.beta)], scales)
}

/// A member of a grand maximal family: a pair together with all its left
/// translates by elements of the unit cone tube of the given aperture
/// (aperture 0 means the pair itself).
#[derive(Clone, Debug)]
pub struct GrandMember {
    pub pair: FilterPair,
    pub aperture: f64,
}

impl GrandMember {
    pub fn new(pair: FilterPair, aperture: f64) -> Self {
        Self { pair, aperture }
    }
}

/// Constants `C_m` allowed in the decay bounds of a Poisson-bounded pair, for `m = 0, 1, 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayBounds {
    pub c1: [f64; 3],
    pub c2: [f64; 3],
}

impl Default for DecayBounds {
    fn default() -> Self {
        Self { c1: [1e6; 3], c2: [1e6; 3] }
    }
}

/// Measured decay constants of a pair.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub pair: String,
    pub c1: [f64; 3],
    pub c2: [f64; 3],
}

/// Sampled kernel of `h(s|T|)` on the periodic t-line of `spec`, centred at `t = 0`.
pub fn line_kernel<H: Fn(f64) -> f64>(spec: &GridSpec, h: H) -> Vec<f64> {
    let n = spec.n_t;
    let mut buf: Vec<C64> = (0..n)
        .map(|b| {
            let m = signed_bin(b, n);
            let l = std::f64::consts::PI * m as f64 / spec.t_half;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            C64::new(h(l.abs()) * sign, 0.0)
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|v| v.re / (2.0 * spec.t_half)).collect()
}

/// Measured constants in `|D phi1(g)| (1 + |g|^2)^{2m + D/2 + 1/2}` and
/// `|Delta^n phi2(t)| (1 + t^2)^{n + 1}` for orders 0, 1, 2.
pub fn decay_constants(pair: &FilterPair, calc: &SpectralCalculus) -> Result<DecayReport> {
    let spec = &calc.spec;
    let k1 = calc.apply_real(&GridField::delta(spec), |mu, _| (pair.h1)(mu.max(0.0).sqrt()))?;
    let dd = (2 * spec.nu + 2) as f64;
    let fields: Vec<VectorField> =
        (0..spec.nu).map(VectorField::X).chain((0..spec.nu).map(VectorField::Y)).collect();
    let weight: Vec<f64> = (0..spec.len())
        .map(|i| {
            let (z, t) = spec.point(i);
            1.0 + gauge_norm_packed(&z, t).powi(2)
        })
        .collect();
    let sup = |g: &GridField, m: usize| -> f64 {
        g.values
            .iter()
            .zip(&weight)
            .map(|(v, w)| v.norm() * w.powf(2.0 * m as f64 + dd / 2.0 + 0.5))
            .fold(0.0, f64::max)
    };
    let mut c1 = [0.0; 3];
    c1[0] = sup(&k1, 0);
    let firsts: Vec<GridField> = fields.iter().map(|&v| vector_field(&k1, v)).collect();
    c1[1] = firsts.iter().map(|g| sup(g, 1)).fold(0.0, f64::max);
    c1[2] = firsts
        .iter()
        .flat_map(|g| fields.iter().map(move |&v| vector_field(g, v)))
        .map(|g| sup(&g, 2))
        .fold(0.0, f64::max);
    let mut c2 = [0.0; 3];
    for (n, c) in c2.iter_mut().enumerate() {
        let line = line_kernel(spec, |l| (pair.h2)(l) * l.powi(2 * n as i32));
        *c = line
            .iter()
            .enumerate()
            .map(|(k, v)| v.abs() * (1.0 + spec.t_coord(k).powi(2)).powi(n as i32 + 1))
            .fold(0.0, f64::max);
    }
    Ok(DecayReport { pair: pair.name.clone(), c1, c2 })
}

/// Check a pair against `bounds`, naming the first violated derivative order.
pub fn validate_poisson_bounded(pair: &FilterPair, calc: &SpectralCalculus, bounds: &DecayBounds) -> Result<DecayReport> {
    let rep = decay_constants(pair, calc)?;
    for m in 0..3 {
        if !(rep.c1[m] <= bounds.c1[m]) {
            return Err(Error::Decay { pair: format!("{} (phi1)", pair.name), order: m });
        }
        if !(rep.c2[m] <= bounds.c2[m]) {
            return Err(Error::Decay { pair: format!("{} (phi2)", pair.name), order: m });
        }
    }
    Ok(rep)
}

/// Grand maximal function over a validated Poisson-bounded family.
pub fn grand_maximal(
    f: &GridField,
    calc: &SpectralCalculus,
    family: &[GrandMember],
    scales: &ScaleGrid,
    bounds: &DecayBounds,
) -> Result<GridField> {
    for m in family {
        validate_poisson_bounded(&m.pair, calc, bounds)?;
    }
    grand_maximal_unchecked(f, calc, family, scales)
}

fn grand_maximal_unchecked(
    f: &GridField,
    calc: &SpectralCalculus,
    family: &[GrandMember],
    scales: &ScaleGrid,
) -> Result<GridField> {
    let spec = &f.spec;
    let c = calc.forward(f)?;
    let mut best = vec![0.0f64; spec.len()];
    for m in family {
        for (r, s) in scales.pairs() {
            let u = pair_response(calc, &c, &m.pair, r, s)?.abs();
            let v = if m.aperture > 0.0 {
                tube_max(spec, &u, m.aperture * r, m.aperture * m.aperture * s)
            } else {
                u
            };
            best.par_iter_mut().zip(v.par_iter()).for_each(|(b, x)| *b = b.max(*x));
        }
    }
    Ok(real_field(spec, best))
}

/// Default particle order `M`: the least integer above `nu / 2`.
pub fn default_m(nu: usize) -> usize {
    nu / 2 + 1
}

/// Check that `phi^(1)` annihilates polynomials of degree up to `2 m` and
/// `phi^(2)` has vanishing zeroth and first moments, through the symbols'
/// order of vanishing at the origin.
pub fn check_cancellation(pair: &FilterPair, m: usize) -> Result<()> {
    let eps = 2f64.powi(-12);
    let h0 = (pair.h1)(0.0).abs();
    if h0 > 1e-8 {
        return Err(Error::Cancellation { component: format!("{} phi1", pair.name), moment: "0".into(), value: h0 });
    }
    // a degree-d moment needs h1(sqrt(x)) = o(x^{d/2})
    for d in 1..=2 * m {
        let v = (pair.h1)(eps).abs() / eps.powi(d as i32 + 1);
        if v > 1e-8 {
            return Err(Error::Cancellation { component: format!("{} phi1", pair.name), moment: d.to_string(), value: v });
        }
    }
    let g0 = (pair.h2)(0.0).abs();
    if g0 > 1e-8 {
        return Err(Error::Cancellation { component: format!("{} phi2", pair.name), moment: "0".into(), value: g0 });
    }
    let g1 = (pair.h2)(eps).abs() / eps;
    if g1 > 1e-8 {
        return Err(Error::Cancellation { component: format!("{} phi2", pair.name), moment: "1".into(), value: g1 });
    }
    Ok(())
}

/// `int k(g) x^a y^b t^c dg` for all monomials of homogeneous degree `a + b + 2c <= max_degree` (`nu = 1` monomial labels).
pub fn kernel_moments(k: &GridField, max_degree: usize) -> Vec<(Vec<usize>, f64)> {
    let spec = &k.spec;
    let d = spec.zdim();
    let mut out = Vec::new();
    let mut exps = vec![0usize; d + 1];
    fn rec(
        pos: usize,
        left: usize,
        exps: &mut Vec<usize>,
        d: usize,
        k: &GridField,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if pos == d + 1 {
            let spec = &k.spec;
            let vals: Vec<f64> = (0..spec.len())
                .map(|i| {
                    let (z, t) = spec.point(i);
                    let mut p = t.powi(exps[d] as i32);
                    for a in 0..d {
                        p *= z[a].powi(exps[a] as i32);
                    }
                    k.values[i].re * p
                })
                .collect();
            out.push((exps.clone(), crate::util::pairwise_sum(&vals) * spec.dv()));
            return;
        }
        let w = if pos == d { 2 } else { 1 };
        for e in 0..=left / w {
            exps[pos] = e;
            rec(pos + 1, left - e * w, exps, d, k, out);
        }
        exps[pos] = 0;
    }
    rec(0, max_degree, &mut exps, d, k, &mut out);
    out
}

/// `(sum over scales of w |f *_1 phi_{r,s}|^2 averaged over chi_{beta r} , chi_{gamma s})^{1/2}`.
pub fn area_fn(
    f: &GridField,
    calc: &SpectralCalculus,
    pair: &FilterPair,
    beta: f64,
    gamma: f64,
    scales: &ScaleGrid,
) -> Result<GridField> {
    if !(0.0..=1.0).contains(&beta) || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain("area aperture parameters must lie in [0, 1]".into()));
    }
    area_fn_unchecked(f, calc, pair, beta, gamma, scales)
}

/// [`area_fn`] without the `[0, 1]` restriction on the apertures.
pub fn area_fn_unchecked(
    f: &GridField,
    calc: &SpectralCalculus,
    pair: &FilterPair,
    beta: f64,
    gamma: f64,
    scales: &ScaleGrid,
) -> Result<GridField> {
    check_cancellation(pair, default_m(f.spec.nu))?;
    let spec = &f.spec;
    let c = calc.forward(f)?;
    let (wr, ws) = scales.log_weights();
    let mut acc = vec![0.0f64; spec.len()];
    for (i, &r) in scales.r_values.iter().enumerate() {
        for (l, &s) in scales.s_values.iter().enumerate() {
            let u = pair_response(calc, &c, pair, r, s)?;
            let mut q: Vec<f64> = u.values.iter().map(|v| v.norm_sqr()).collect();
            if beta > 0.0 {
                let pre = ColumnPrefix::new(spec, &q);
                q = tube_average_with(spec, &pre, beta * r, 0.0);
            }
            if gamma > 0.0 {
                q = interval_average(spec, &q, gamma * s);
            }
            let w = wr[i] * ws[l];
            acc.par_iter_mut().zip(q.par_iter()).for_each(|(a, v)| *a += w * v);
        }
    }
    Ok(real_field(spec, acc.into_iter().map(f64::sqrt).collect()))
}

/// Continuous square function by log-grid quadrature of `dr/r ds/s`.
pub fn square_cts(f: &GridField, calc: &SpectralCalculus, pair: &FilterPair, scales: &ScaleGrid) -> Result<GridField> {
    area_fn(f, calc, pair, 0.0, 0.0, scales)
}

/// Discrete square function `(sum |f *_1 phi_{2^m, 2^n}|^2)^{1/2}` over the grid's scales.
pub fn square_dis(f: &GridField, calc: &SpectralCalculus, pair: &FilterPair, scales: &ScaleGrid) -> Result<GridField> {
    check_cancellation(pair, default_m(f.spec.nu))?;
    let spec = &f.spec;
    let c = calc.forward(f)?;
    let mut acc = vec![0.0f64; spec.len()];
    for (r, s) in scales.pairs() {
        let u = pair_response(calc, &c, pair, r, s)?;
        acc.par_iter_mut().zip(u.values.par_iter()).for_each(|(a, v)| *a += v.norm_sqr());
    }
    Ok(real_field(spec, acc.into_iter().map(f64::sqrt).collect()))
}

/// `sum over scales of phi_{r,s} *_1 phi_{r,s} *_1 f`, the discrete reproducing formula.
pub fn reproduce(f: &GridField, calc: &SpectralCalculus, pair: &FilterPair, scales: &ScaleGrid) -> Result<GridField> {
    let pairs = scales.pairs();
    calc.apply_real(f, |mu, l| pairs.iter().map(|&(r, s)| pair.symbol(r, s, mu, l).powi(2)).sum())
}

/// Remove the `lambda = 0` fiber (the t-mean of every column).
pub fn remove_t_mean(f: &GridField) -> GridField {
    let nt = f.spec.n_t;
    let mut out = f.clone();
    out.values.par_chunks_mut(nt).for_each(|c| {
        let m: C64 = c.iter().sum::<C64>() / nt as f64;
        for v in c.iter_mut() {
            *v -= m;
        }
    });
    out
}

/// Horizontal Riesz transforms `X_j L^{-1/2} f`, `Y_j L^{-1/2} f` (`2 nu` components).
pub fn riesz_horizontal(f: &GridField, calc: &SpectralCalculus) -> Result<Vec<GridField>> {
    calc.spec.check_same(&f.spec)?;
    let g = calc.power(f, -0.5)?;
    let nu = f.spec.nu;
    Ok((0..nu).map(VectorField::X).chain((0..nu).map(VectorField::Y)).map(|v| vector_field(&g, v)).collect())
}

/// Central Riesz transform `T Delta^{-1/2}`, the multiplier `i sgn(lambda)`.
pub fn central_riesz(f: &GridField) -> Result<GridField> {
    apply_t_multiplier(f, |l, nyq| if nyq || l == 0.0 { C64::new(0.0, 0.0) } else { C64::new(0.0, l.signum()) })
}

/// Flag Riesz transforms: the horizontal transforms of the central transform.
pub fn flag_riesz(f: &GridField, calc: &SpectralCalculus) -> Result<Vec<GridField>> {
    riesz_horizontal(&central_riesz(f)?, calc)
}

/// `||f||_1 + sum ||R_j f||_1 + ||R^(2) f||_1 + sum ||R_F,j f||_1`.
pub fn riesz_l1_sum(f: &GridField, calc: &SpectralCalculus) -> Result<f64> {
    let l1 = |g: &GridField| crate::fields::lp_norm(g, 1.0);
    let mut s = l1(f);
    s += riesz_horizontal(f, calc)?.iter().map(l1).sum::<f64>();
    let c = central_riesz(f)?;
    s += l1(&c);
    s += riesz_horizontal(&c, calc)?.iter().map(l1).sum::<f64>();
    Ok(s)
}

/// Periodic Hilbert transform in t, the multiplier `-i sgn(lambda)`.
pub fn hilbert_central(f: &GridField) -> Result<GridField> {
    apply_t_multiplier(f, |l, nyq| if nyq || l == 0.0 { C64::new(0.0, 0.0) } else { C64::new(0.0, -l.signum()) })
}

/// Periodic principal-value sum `(1/P) PV int f(t - u) cot(pi u / P) du` over odd offsets.
pub fn hilbert_pv_sum(f: &GridField) -> Result<GridField> {
    let spec = &f.spec;
    if !spec.t_periodic {
        return Err(Error::SpecMismatch("needs a periodic t axis".into()));
    }
    let n = spec.n_t;
    let p = 2.0 * spec.t_half;
    let dt = spec.dt();
    let w: Vec<f64> = (0..n)
        .map(|j| if j % 2 == 1 { 2.0 * dt / p / (std::f64::consts::PI * j as f64 * dt / p).tan() } else { 0.0 })
        .collect();
    let mut out = f.values.clone();
    out.par_chunks_mut(n).enumerate().for_each(|(zi, col)| {
        let c = f.column(zi);
        for (k, o) in col.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, wj) in w.iter().enumerate() {
                if *wj != 0.0 {
                    acc += c[(k + n - j) % n] * *wj;
                }
            }
            *o = acc;
        }
    });
    Ok(GridField { spec: spec.clone(), values: out })
}

/// Report of the randomized-sign comparison.
#[derive(Clone, Debug, Serialize)]
pub struct KhinchinReport {
    pub square_l1: f64,
    pub mean_random_l1: f64,
    pub std_err: f64,
    pub rel_std_err: f64,
    pub ratio: f64,
    pub n_draws: usize,
    pub seed: u64,
    pub rng: String,
}

/// Compare `||S_dis f||_1` with the mean of `||sum r_m s_n f *_1 phi_{m,n}||_1` over random signs.
pub fn khinchin_square_check(
    f: &GridField,
    calc: &SpectralCalculus,
    pair: &FilterPair,
    scales: &ScaleGrid,
    n_draws: usize,
    seed: u64,
) -> Result<KhinchinReport> {
    let sq = square_dis(f, calc, pair, scales)?;
    let square_l1 = crate::fields::lp_norm(&sq, 1.0);
    let c = calc.forward(f)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let rm: Vec<f64> = scales.r_values.iter().map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let sn: Vec<f64> = scales.s_values.iter().map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let g = calc.apply_coeffs(&c, |mu, l| {
            let mut acc = 0.0;
            for (i, &r) in scales.r_values.iter().enumerate() {
                let a = (pair.h1)(r * mu.max(0.0).sqrt());
                if a == 0.0 {
                    continue;
                }
                for (k, &s) in scales.s_values.iter().enumerate() {
                    acc += rm[i] * sn[k] * a * (pair.h2)(s * l.abs());
                }
            }
            C64::new(acc, 0.0)
        })?;
        draws.push(crate::fields::lp_norm(&g, 1.0));
    }
    let n = draws.len().max(1) as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = if draws.len() > 1 {
        draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std_err = (var / n).sqrt();
    Ok(KhinchinReport {
        square_l1,
        mean_random_l1: mean,
        std_err,
        rel_std_err: if mean > 0.0 { std_err / mean } else { 0.0 },
        ratio: if mean > 0.0 { square_l1 / mean } else { 0.0 },
        n_draws,
        seed,
        rng: "ChaCha20".into(),
    })
}

/// JSON report of an operator evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorReport {
    pub operator: String,
    pub params: serde_json::Value,
    pub norms: BTreeMap<String, f64>,
    pub ratios: BTreeMap<String, f64>,
    pub scale_band: ScaleBand,
    pub seed: Option<u64>,
}

impl OperatorReport {
    pub fn new(operator: &str, params: serde_json::Value, scales: &ScaleGrid) -> Self {
        Self {
            operator: operator.into(),
            params,
            norms: BTreeMap::new(),
            ratios: BTreeMap::new(),
            scale_band: scales.band(),
            seed: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
