//! Heat and Poisson kernels of the sub-Laplacian and of `-d^2/dt^2`, the flag
//! Poisson kernel, and the Phong-Stein and Cauchy-Szego kernels.

use crate::error::{Error, Result};
use crate::fields::{conv2, sublaplacian, GridField, GridSpec, Line, C64};
use crate::group::{gauge_norm_packed, koranyi_norm_packed};
use crate::spectral::SpectralCalculus;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Shape of a kernel estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateForm {
    HeatGaussian,
    PoissonRational,
}

/// A measured constant in a kernel bound of order `(m, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub m: usize,
    pub n: usize,
    pub constant: f64,
    pub form: EstimateForm,
}

/// Default number of Gauss-Laguerre nodes in the subordination integral.
pub const DEFAULT_NODES: usize = 128;

/// Gershgorin bound on the spectrum of the discrete sub-Laplacian.
pub fn spectral_bound(spec: &GridSpec) -> f64 {
    4.0 * spec.zdim() as f64 / (spec.dz() * spec.dz())
}

/// Default explicit step: a quarter of the inverse spectral bound, well inside
/// the RK4 stability interval and accurate on the top modes.
pub fn stable_step(spec: &GridSpec) -> f64 {
    0.25 / spectral_bound(spec)
}

/// Evolve `f` under `du/dr = -L u` for time `r` with classical RK4.
pub fn heat_evolve(f: &GridField, r: f64, step: Option<f64>) -> Result<GridField> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("heat time must be nonnegative, got {r}")));
    }
    let limit = 2.78 / spectral_bound(&f.spec);
    let h0 = step.unwrap_or_else(|| stable_step(&f.spec));
    if !(h0 > 0.0) {
        return Err(Error::Domain("step must be positive".into()));
    }
    if h0 > limit {
        return Err(Error::Numerical(format!("step {h0:e} exceeds the stability limit; use a step below {limit:e}")));
    }
    let nsteps = (r / h0).ceil().max(if r > 0.0 { 1.0 } else { 0.0 }) as usize;
    if nsteps == 0 {
        return Ok(f.clone());
    }
    let h = r / nsteps as f64;
    let mut u = f.clone();
    let mut prev = u.l2();
    for _ in 0..nsteps {
        let k1 = sublaplacian(&u).scale(-1.0);
        let k2 = sublaplacian(&u.add(&k1.scale(h / 2.0))?).scale(-1.0);
        let k3 = sublaplacian(&u.add(&k2.scale(h / 2.0))?).scale(-1.0);
        let k4 = sublaplacian(&u.add(&k3.scale(h))?).scale(-1.0);
        let nv: Vec<C64> = (0..u.values.len())
            .map(|i| u.values[i] + (k1.values[i] + k2.values[i] * 2.0 + k3.values[i] * 2.0 + k4.values[i]) * (h / 6.0))
            .collect();
        u.values = nv;
        let n = u.l2();
        // the exact flow is an L2 contraction
        if !n.is_finite() || n > prev * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::Numerical(format!("norm growth in heat stepping; retry with a step below {:e}", h / 2.0)));
        }
        prev = n;
    }
    Ok(u)
}

/// Kernel of `e^{-r L}` by time-stepping from the discrete delta.
pub fn heat_kernel(r: f64, spec: &GridSpec) -> Result<GridField> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("heat time must be positive, got {r}")));
    }
    heat_evolve(&GridField::delta(spec), r, None)
}

/// Nodes and weights of generalized Gauss-Laguerre quadrature for `int_0^inf v^alpha e^{-v} g(v) dv`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        j[(k, k)] = 2.0 * k as f64 + alpha + 1.0;
        if k + 1 < n {
            let b = ((k + 1) as f64 * (k as f64 + 1.0 + alpha)).sqrt();
            j[(k, k + 1)] = b;
            j[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mu0 = gamma(alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + 7.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Quadrature for `int_0^inf v^{-1/2} e^{-v} g(v) dv` with `n` nodes: the
/// trapezoid rule in `u = ln v` on `[-44, 4.5]`. Unlike Gauss-Laguerre it stays
/// accurate when `g(v) = e^{-c/v}` with small `c`.
pub fn subordination_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (-44.0, 4.5);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let u = lo + i as f64 * h;
            let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
            (u.exp(), w * (u / 2.0 - u.exp()).exp())
        })
        .unzip()
}

/// Subordination quadrature of `e^{-r sqrt(mu)}`:
/// `(1/sqrt(pi)) sum_i w_i exp(-r^2 mu / (4 v_i))`.
pub fn subordinated_symbol(r: f64, mu: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let c = r * r * mu.max(0.0) / 4.0;
    nodes.iter().zip(weights).map(|(v, w)| w * (-c / v).exp()).sum::<f64>() / std::f64::consts::PI.sqrt()
}

/// Poisson kernel `e^{-r sqrt(L)} delta` by subordination of
/// the heat semigroup with `n_nodes` nodes, checked against twice as many.
pub fn poisson_kernel_with(calc: &SpectralCalculus, r: f64, n_nodes: usize) -> Result<GridField> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("Poisson scale must be positive, got {r}")));
    }
    let delta = GridField::delta(&calc.spec);
    let (x1, w1) = subordination_rule(n_nodes);
    let (x2, w2) = subordination_rule(2 * n_nodes);
    let p1 = calc.apply_real(&delta, |mu, _| subordinated_symbol(r, mu, &x1, &w1))?;
    let p2 = calc.apply_real(&delta, |mu, _| subordinated_symbol(r, mu, &x2, &w2))?;
    let rel = p1.sub(&p2)?.l2() / p2.l2();
    if rel > 1e-4 {
        return Err(Error::Numerical(format!(
            "subordination quadrature unstable: {n_nodes} vs {} nodes differ by {rel:e}",
            2 * n_nodes
        )));
    }
    Ok(p1)
}

/// Poisson kernel on a periodic grid with the default node count.
pub fn poisson_kernel(r: f64, spec: &GridSpec) -> Result<GridField> {
    let calc = SpectralCalculus::build(spec)?;
    poisson_kernel_with(&calc, r, DEFAULT_NODES)
}

/// Poisson kernel on an aperiodic grid by subordinating time-stepped heat kernels.
pub fn poisson_kernel_stepped(r: f64, spec: &GridSpec, n_nodes: usize) -> Result<GridField> {
    let (x, w) = subordination_rule(n_nodes);
    let mut times: Vec<(f64, f64)> =
        x.iter().zip(&w).map(|(v, w)| (r * r / (4.0 * v), w / std::f64::consts::PI.sqrt())).collect();
    times.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut u = GridField::delta(spec);
    let mut now = 0.0;
    let mut acc = GridField::zeros(spec);
    for (t, wt) in times {
        u = heat_evolve(&u, t - now, None)?;
        now = t;
        acc.axpy(C64::new(wt, 0.0), &u);
    }
    Ok(acc)
}

/// `s / (pi (s^2 + t^2))` on an open line; the periodized form
/// `sinh(a) / (2T (cosh(a) - cos(pi t / T)))`, `a = pi s / T`, on a periodic one.
pub fn poisson_1d(s: f64, line: &Line) -> Result<Line> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("Poisson scale must be positive, got {s}")));
    }
    let tt = line.half_extent;
    let periodic = line.periodic;
    Line::from_fn(tt, line.n, periodic, |t| {
        if periodic {
            let a = std::f64::consts::PI * s / tt;
            // sinh(a) / (cosh(a) - cos(b)) written to avoid overflow for large a
            let e = (-a).exp();
            let num = 1.0 - e * e;
            let den = 1.0 + e * e - 2.0 * e * (std::f64::consts::PI * t / tt).cos();
            num / den / (2.0 * tt)
        } else {
            s / (std::f64::consts::PI * (s * s + t * t))
        }
    })
}

/// Flag Poisson kernel `p_r *_2 p_s`.
pub fn flag_poisson_with(calc: &SpectralCalculus, r: f64, s: f64) -> Result<GridField> {
    let p = poisson_kernel_with(calc, r, DEFAULT_NODES)?;
    let line = poisson_1d(s, &Line::for_spec(&calc.spec, |_| 0.0))?;
    conv2(&p, &line)
}

pub fn flag_poisson(r: f64, s: f64, spec: &GridSpec) -> Result<GridField> {
    let calc = SpectralCalculus::build(spec)?;
    flag_poisson_with(&calc, r, s)
}

/// Mean of a degree-zero function over the unit sphere of `C^nu`.
pub fn sphere_mean<W: Fn(&[f64]) -> f64>(nu: usize, omega: &W) -> f64 {
    if nu == 1 {
        let n = 4096;
        let s: f64 = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                omega(&[a.cos(), a.sin()])
            })
            .sum();
        return s / n as f64;
    }
    // Gaussian average of a degree-zero function equals its sphere mean
    let (x, w) = gauss_hermite(16);
    let d = 2 * nu;
    let total = x.len().pow(d as u32);
    let mut acc = 0.0;
    let mut wsum = 0.0;
    let mut p = vec![0.0; d];
    for mut idx in 0..total {
        let mut ww = 1.0;
        for pa in p.iter_mut() {
            let i = idx % x.len();
            idx /= x.len();
            *pa = x[i];
            ww *= w[i];
        }
        acc += ww * omega(&p);
        wsum += ww;
    }
    acc / wsum
}

fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n - 1 {
        let b = ((k + 1) as f64 / 2.0).sqrt();
        j[(k, k + 1)] = b;
        j[(k + 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn origin_index(spec: &GridSpec) -> usize {
    let zi = spec.zi_from_ints(&vec![0; spec.zdim()]).expect("origin node");
    zi * spec.n_t + spec.n_t / 2
}

/// `omega(z) / (|z|^2 + t^2)^nu / (|z|^2 + i t)` with the origin cell zeroed.
pub fn phong_stein_kernel<W: Fn(&[f64]) -> f64 + Sync>(spec: &GridSpec, omega: W) -> Result<GridField> {
    let m = sphere_mean(spec.nu, &omega);
    if m.abs() > 1e-6 {
        return Err(Error::Domain(format!("omega must have mean zero on the sphere, got {m:e}")));
    }
    let nu = spec.nu as i32;
    let mut k = GridField::from_fn(spec, |z, t| {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        if r2 == 0.0 && t == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let w = if r2 == 0.0 { 0.0 } else { omega(z) };
        C64::new(w / (r2 + t * t).powi(nu), 0.0) / C64::new(r2, t)
    });
    k.values[origin_index(spec)] = C64::new(0.0, 0.0);
    Ok(k)
}

/// `c / (|z|^2 + i t)^{nu + 1}` with the origin cell zeroed.
pub fn cauchy_szego_kernel(spec: &GridSpec, c: f64) -> GridField {
    let p = spec.nu as i32 + 1;
    let mut k = GridField::from_fn(spec, |z, t| {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        if r2 == 0.0 && t == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::new(c, 0.0) / C64::new(r2, t).powi(p)
    });
    k.values[origin_index(spec)] = C64::new(0.0, 0.0);
    k
}

/// Relative change of `f *_1 k` when the cells adjacent to the origin are also zeroed.
pub fn pv_sensitivity(f: &GridField, k: &GridField) -> Result<f64> {
    let spec = &k.spec;
    let a = crate::fields::conv1_fft(f, k)?;
    let mut k3 = k.clone();
    for i in 0..spec.len() {
        let zi = i / spec.n_t;
        let kk = i % spec.n_t;
        let near = spec.z_ints(zi).iter().all(|v| v.abs() <= 1) && (kk as i64 - (spec.n_t / 2) as i64).abs() <= 1;
        if near {
            k3.values[i] = C64::new(0.0, 0.0);
        }
    }
    let b = crate::fields::conv1_fft(f, &k3)?;
    Ok(a.sub(&b)?.l2() / a.l2().max(1e-300))
}

/// Samples reachable from the origin by unit horizontal steps, and the index
/// of that orbit in each t-column.
///
/// Kernels of functions of the sub-Laplacian live on this orbit: when the
/// shift ratio is an integer the horizontal steps generate a sublattice of
/// the grid, and a kernel value there is `index` times the density it
/// approximates.
pub fn origin_orbit(spec: &GridSpec) -> (Vec<bool>, f64) {
    let nt = spec.n_t as i64;
    let ratio = spec.shift_ratio().round() as i64;
    let nu = spec.nu;
    let mut seen = vec![false; spec.len()];
    let start = origin_index(spec);
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let zi = i / spec.n_t;
        let k = (i % spec.n_t) as i64;
        let ints = spec.z_ints(zi);
        for axis in 0..spec.zdim() {
            for sign in [-1i64, 1] {
                let mut nb = ints.clone();
                nb[axis] += sign;
                let Some(nzi) = spec.zi_from_ints(&nb) else { continue };
                let shift = if axis < nu { sign * ints[nu + axis] * ratio } else { -sign * ints[axis - nu] * ratio };
                let mut nk = k + shift;
                if spec.t_periodic {
                    nk = nk.rem_euclid(nt);
                } else if nk < 0 || nk >= nt {
                    continue;
                }
                let j = nzi * spec.n_t + nk as usize;
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    let on_origin_col = seen[spec.zi_from_ints(&vec![0; spec.zdim()]).expect("origin") * spec.n_t..][..spec.n_t]
        .iter()
        .filter(|b| **b)
        .count();
    (seen, spec.n_t as f64 / on_origin_col as f64)
}

/// Samples with `|z|_inf <= Z/2` and `|t| <= T/2`.
pub fn bulk_mask(spec: &GridSpec) -> Vec<bool> {
    (0..spec.len())
        .map(|i| {
            let (z, t) = spec.point(i);
            z.iter().all(|v| v.abs() <= spec.z_half / 2.0) && t.abs() <= spec.t_half / 2.0
        })
        .collect()
}

/// `[min, max]` over the bulk of the orbit of `p_r(g) (r^2 + |g|^2)^{(D+1)/2} / r`.
pub fn poisson_ratio_band(p: &GridField, r: f64) -> (f64, f64) {
    let spec = &p.spec;
    let d = (2 * spec.nu + 2) as f64;
    let bulk = bulk_mask(spec);
    let (orbit, index) = origin_orbit(spec);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..spec.len() {
        if !bulk[i] || !orbit[i] {
            continue;
        }
        let (z, t) = spec.point(i);
        let g = gauge_norm_packed(&z, t);
        let v = p.values[i].re / index * (r * r + g * g).powf((d + 1.0) / 2.0) / r;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Two-sided Poisson estimate: the constant `C = max(hi, 1/lo)`.
pub fn poisson_estimate(p: &GridField, r: f64) -> KernelEstimate {
    let (lo, hi) = poisson_ratio_band(p, r);
    KernelEstimate { m: 0, n: 0, constant: hi.max(1.0 / lo), form: EstimateForm::PoissonRational }
}

/// `max over the bulk of log h_r(g) + |g|_K^2 / (4 pi (1 + delta) r)`.
pub fn gaussian_log_ratio(h: &GridField, r: f64, delta: f64) -> f64 {
    let spec = &h.spec;
    let bulk = bulk_mask(spec);
    let (orbit, index) = origin_orbit(spec);
    let mut best = f64::NEG_INFINITY;
    for i in 0..spec.len() {
        if !bulk[i] || !orbit[i] || h.values[i].re <= 0.0 {
            continue;
        }
        let (z, t) = spec.point(i);
        let k = koranyi_norm_packed(&z, t);
        best = best.max((h.values[i].re / index).ln() + k * k / (4.0 * std::f64::consts::PI * (1.0 + delta) * r));
    }
    best
}

/// Measured `C_n` in `|Delta^n p_s(t)| <= C_n s / (s^2 + t^2)^{n+1}`, with the
/// compact second difference as `Delta`.
pub fn poisson_derivative_constant(s: f64, line: &Line, n: usize) -> Result<KernelEstimate> {
    let p = poisson_1d(s, line)?;
    let dt = line.dt();
    let mut v: Vec<f64> = p.values.iter().map(|c| c.re).collect();
    for _ in 0..n {
        let w = v.clone();
        for i in 0..v.len() {
            let get = |j: i64| -> f64 {
                if line.periodic {
                    w[j.rem_euclid(w.len() as i64) as usize]
                } else if j < 0 || j >= w.len() as i64 {
                    0.0
                } else {
                    w[j as usize]
                }
            };
            v[i] = -(get(i as i64 + 1) - 2.0 * w[i] + get(i as i64 - 1)) / (dt * dt);
        }
    }
    let mut c: f64 = 0.0;
    // skip the edge samples where the stencil sees the truncation
    for (i, val) in v.iter().enumerate().take(line.n - 2 * n).skip(2 * n) {
        let t = line.coord(i);
        c = c.max(val.abs() * (s * s + t * t).powi(n as i32 + 1) / s);
    }
    Ok(KernelEstimate { m: 0, n, constant: c, form: EstimateForm::PoissonRational })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_rule() {
        let (x, w) = gauss_laguerre(32, -0.5);
        let pi = std::f64::consts::PI;
        // int v^{-1/2} e^{-v} dv = sqrt(pi), int v^{1/2} e^{-v} dv = sqrt(pi)/2
        let s0: f64 = w.iter().sum();
        let s1: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((s0 - pi.sqrt()).abs() < 1e-12);
        assert!((s1 - pi.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn subordination_accuracy() {
        let (x, w) = subordination_rule(DEFAULT_NODES);
        for c in [0.0, 1e-4, 1e-2, 0.3, 1.0, 5.0, 30.0] {
            let mu = 4.0 * c * c;
            let got = subordinated_symbol(1.0, mu, &x, &w);
            assert!((got - (-2.0 * c as f64).exp()).abs() < 1e-6, "{c} {got}");
        }
    }

    #[test]
    fn periodized_line_mass() {
        let line = Line::from_fn(8.0, 64, true, |_| 0.0).unwrap();
        let p = poisson_1d(1.0, &line).unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-9);
    }
}
