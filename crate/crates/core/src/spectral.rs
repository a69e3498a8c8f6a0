//! Joint functional calculus of the sub-Laplacian and `iT` on a t-periodic grid.
//!
//! After a Fourier transform in t, the sub-Laplacian at frequency `lambda`
//! becomes a magnetic lattice Laplacian on the z-grid: each unit step
//! `z -> z +- dz e_a` picks up the phase `exp(i lambda a(z))`, where `a(z)` is
//! the central shift `S(z, +- dz e_a)`. Each of these Hermitian matrices is
//! diagonalized once; multipliers then act on the eigen-coefficients.

use crate::error::{Error, Result};
use crate::fields::{GridField, GridSpec, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Eigen-data of one t-frequency.
#[derive(Clone, Debug)]
pub struct Mode {
    /// FFT bin.
    pub bin: usize,
    /// `lambda = pi m / T` with signed `m`.
    pub lambda: f64,
    pub evals: Vec<f64>,
    /// Columns are orthonormal eigenvectors.
    pub evecs: DMatrix<C64>,
}

/// Per-mode eigendecompositions for a grid.
#[derive(Clone, Debug)]
pub struct SpectralCalculus {
    pub spec: GridSpec,
    pub modes: Vec<Mode>,
}

/// Eigen-coefficients of a field: `coeffs[bin][i]`.
#[derive(Clone, Debug)]
pub struct Coeffs {
    pub data: Vec<Vec<C64>>,
}

/// Largest z-grid handled by the dense eigensolver.
pub const MAX_ZPTS: usize = 4096;

/// Signed frequency index of an FFT bin.
pub fn signed_bin(bin: usize, n: usize) -> i64 {
    if bin < n / 2 {
        bin as i64
    } else {
        bin as i64 - n as i64
    }
}

/// Assemble the twisted Laplacian at frequency `lambda`.
pub fn twisted_laplacian(spec: &GridSpec, lambda: f64) -> DMatrix<C64> {
    let nz = spec.n_zpts();
    let nu = spec.nu;
    let dz = spec.dz();
    let inv = 1.0 / (dz * dz);
    let symp = 4.0 * nu as f64;
    let mut h = DMatrix::<C64>::zeros(nz, nz);
    for zi in 0..nz {
        let ints = spec.z_ints(zi);
        h[(zi, zi)] = C64::new(2.0 * spec.zdim() as f64 * inv, 0.0);
        for axis in 0..spec.zdim() {
            for sign in [-1i64, 1] {
                let mut nb = ints.clone();
                nb[axis] += sign;
                let Some(nzi) = spec.zi_from_ints(&nb) else { continue };
                let shift = if axis < nu {
                    sign as f64 * symp * ints[nu + axis] as f64 * dz * dz
                } else {
                    -(sign as f64) * symp * ints[axis - nu] as f64 * dz * dz
                };
                h[(zi, nzi)] -= C64::from_polar(inv, lambda * shift);
            }
        }
    }
    h
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    spec_hash: String,
    lambda_index: usize,
    n: usize,
}

fn cache_path(dir: &Path, spec: &GridSpec, bin: usize) -> std::path::PathBuf {
    dir.join(format!("{}_{bin}.eig", &spec.hash()[..16]))
}

fn write_mode(path: &Path, spec: &GridSpec, m: &Mode) -> Result<()> {
    let n = m.evals.len();
    let header = CacheHeader { spec_hash: spec.hash(), lambda_index: m.bin, n };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for v in &m.evals {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in m.evecs.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&out)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn read_mode(path: &Path, spec: &GridSpec, bin: usize, lambda: f64) -> Option<Mode> {
    let mut buf = Vec::new();
    std::fs::File::open(path).ok()?.read_to_end(&mut buf).ok()?;
    let nl = buf.iter().position(|&b| b == b'\n')?;
    let header: CacheHeader = serde_json::from_slice(&buf[..nl]).ok()?;
    let n = spec.n_zpts();
    if header.spec_hash != spec.hash() || header.lambda_index != bin || header.n != n {
        return None;
    }
    let p = &buf[nl + 1..];
    if p.len() != 8 * n + 16 * n * n {
        return None;
    }
    let rd = |i: usize| f64::from_le_bytes(p[i..i + 8].try_into().expect("8 bytes"));
    let evals = (0..n).map(|i| rd(8 * i)).collect();
    let off = 8 * n;
    let evecs = DMatrix::from_iterator(n, n, (0..n * n).map(|i| C64::new(rd(off + 16 * i), rd(off + 16 * i + 8))));
    Some(Mode { bin, lambda, evals, evecs })
}

fn solve_mode(spec: &GridSpec, bin: usize) -> Result<Mode> {
    let n = spec.n_t;
    let lambda = std::f64::consts::PI * signed_bin(bin, n) as f64 / spec.t_half;
    let h = twisted_laplacian(spec, lambda);
    let asym = (&h - h.adjoint()).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if asym > 1e-9 {
        return Err(Error::Numerical(format!("twisted Laplacian not Hermitian: {asym:e}")));
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    // sort ascending
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let evals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let evecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Mode { bin, lambda, evals, evecs })
}

impl SpectralCalculus {
    /// Diagonalize every t-frequency of `spec`.
    pub fn build(spec: &GridSpec) -> Result<Self> {
        Self::build_cached(spec, None)
    }

    /// As [`SpectralCalculus::build`], reading and writing eigenpairs under `cache_dir`.
    pub fn build_cached(spec: &GridSpec, cache_dir: Option<&Path>) -> Result<Self> {
        if !spec.t_periodic {
            return Err(Error::SpecMismatch("the spectral calculus needs a periodic t axis".into()));
        }
        let nz = spec.n_zpts();
        if nz > MAX_ZPTS {
            return Err(Error::SizeLimit(format!("{nz} z-points exceeds {MAX_ZPTS}")));
        }
        let n = spec.n_t;
        if let Some(d) = cache_dir {
            std::fs::create_dir_all(d)?;
        }
        // bins 0..=n/2 are solved; the rest are complex conjugates
        let solved: Vec<Mode> = (0..=n / 2)
            .into_par_iter()
            .map(|bin| {
                let lambda = std::f64::consts::PI * signed_bin(bin, n) as f64 / spec.t_half;
                if let Some(d) = cache_dir {
                    let p = cache_path(d, spec, bin);
                    if let Some(m) = read_mode(&p, spec, bin, lambda) {
                        return Ok(m);
                    }
                    let m = solve_mode(spec, bin)?;
                    write_mode(&p, spec, &m)?;
                    Ok(m)
                } else {
                    solve_mode(spec, bin)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut modes: Vec<Option<Mode>> = vec![None; n];
        for m in solved {
            let b = m.bin;
            if b != 0 && b != n / 2 {
                let conj = Mode {
                    bin: n - b,
                    lambda: -m.lambda,
                    evals: m.evals.clone(),
                    evecs: m.evecs.map(|v| v.conj()),
                };
                modes[n - b] = Some(conj);
            }
            modes[b] = Some(m);
        }
        Ok(Self { spec: spec.clone(), modes: modes.into_iter().map(|m| m.expect("all bins filled")).collect() })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Largest eigenvalue over all modes.
    pub fn max_eval(&self) -> f64 {
        self.modes.iter().flat_map(|m| m.evals.iter()).fold(0.0f64, |a, &b| a.max(b))
    }

    /// Smallest eigenvalue over all modes.
    pub fn min_eval(&self) -> f64 {
        self.modes.iter().flat_map(|m| m.evals.iter()).fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Symbol of the compact second difference in t at a mode.
    pub fn central_fd_symbol(&self, bin: usize) -> f64 {
        let dt = self.spec.dt();
        let l = self.modes[bin].lambda;
        (2.0 - 2.0 * (l * dt).cos()) / (dt * dt)
    }

    fn check(&self, f: &GridField) -> Result<()> {
        self.spec.check_same(&f.spec)
    }

    /// Fourier transform in t followed by projection onto the eigenbases.
    pub fn forward(&self, f: &GridField) -> Result<Coeffs> {
        self.check(f)?;
        let n = self.spec.n_t;
        let nz = self.spec.n_zpts();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let mut cols: Vec<C64> = f.values.clone();
        cols.par_chunks_mut(n).for_each(|c| fft.process(c));
        let data: Vec<Vec<C64>> = self
            .modes
            .par_iter()
            .map(|m| {
                let v = DVector::from_iterator(nz, (0..nz).map(|zi| cols[zi * n + m.bin]));
                let c = m.evecs.ad_mul(&v);
                c.iter().copied().collect()
            })
            .collect();
        Ok(Coeffs { data })
    }

    /// Inverse of [`SpectralCalculus::forward`].
    pub fn inverse(&self, c: &Coeffs) -> GridField {
        let n = self.spec.n_t;
        let nz = self.spec.n_zpts();
        let per_mode: Vec<DVector<C64>> = self
            .modes
            .par_iter()
            .zip(c.data.par_iter())
            .map(|(m, d)| &m.evecs * DVector::from_column_slice(d))
            .collect();
        let mut vals = vec![C64::new(0.0, 0.0); nz * n];
        let mut planner = FftPlanner::<f64>::new();
        let ifft = planner.plan_fft_inverse(n);
        vals.par_chunks_mut(n).enumerate().for_each(|(zi, col)| {
            for (b, pm) in per_mode.iter().enumerate() {
                col[b] = pm[zi];
            }
            ifft.process(col);
            let s = 1.0 / n as f64;
            for v in col.iter_mut() {
                *v *= s;
            }
        });
        GridField { spec: self.spec.clone(), values: vals }
    }

    /// Multiply coefficients by `m(mu, lambda)` and invert.
    pub fn apply_coeffs<M>(&self, c: &Coeffs, m: M) -> Result<GridField>
    where
        M: Fn(f64, f64) -> C64 + Sync,
    {
        let scaled = self.scale_coeffs(c, &m)?;
        Ok(self.inverse(&scaled))
    }

    pub fn scale_coeffs<M>(&self, c: &Coeffs, m: &M) -> Result<Coeffs>
    where
        M: Fn(f64, f64) -> C64 + Sync,
    {
        let data: Vec<Vec<C64>> = self
            .modes
            .par_iter()
            .zip(c.data.par_iter())
            .map(|(md, d)| {
                md.evals
                    .iter()
                    .zip(d)
                    .map(|(&mu, &v)| {
                        let w = m(mu.max(0.0), md.lambda);
                        if w.re.is_finite() && w.im.is_finite() {
                            Ok(v * w)
                        } else {
                            Err(Error::Numerical(format!("multiplier not finite at ({mu}, {})", md.lambda)))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Coeffs { data })
    }

    /// `m(L, iT) f` with `m` evaluated at `(mu, lambda)`.
    pub fn apply<M>(&self, f: &GridField, m: M) -> Result<GridField>
    where
        M: Fn(f64, f64) -> C64 + Sync,
    {
        let c = self.forward(f)?;
        self.apply_coeffs(&c, m)
    }

    /// Real multiplier convenience.
    pub fn apply_real<M>(&self, f: &GridField, m: M) -> Result<GridField>
    where
        M: Fn(f64, f64) -> f64 + Sync,
    {
        self.apply(f, |a, b| C64::new(m(a, b), 0.0))
    }

    /// `m(L/|T|, iT) f`; the `lambda = 0` fiber is sent to zero.
    pub fn apply_flag<M>(&self, f: &GridField, m: M) -> Result<GridField>
    where
        M: Fn(f64, f64) -> C64 + Sync,
    {
        self.apply(f, |mu, l| if l == 0.0 { C64::new(0.0, 0.0) } else { m(mu / l.abs(), l) })
    }

    /// Energy of each mode's coefficients, scaled so the total equals `||f||_2^2`.
    pub fn mode_energies(&self, c: &Coeffs) -> Vec<f64> {
        let scale = self.spec.dv() / self.spec.n_t as f64;
        c.data.iter().map(|d| d.iter().map(|v| v.norm_sqr()).sum::<f64>() * scale).collect()
    }

    /// `e^{-r L}` applied to `f`.
    pub fn heat(&self, f: &GridField, r: f64) -> Result<GridField> {
        self.apply_real(f, |mu, _| (-r * mu).exp())
    }

    /// Power of `L` with the null space mapped to zero.
    pub fn power(&self, f: &GridField, p: f64) -> Result<GridField> {
        self.apply_real(f, move |mu, _| if mu < 1e-12 { 0.0 } else { mu.powf(p) })
    }
}

/// Fourier multiplier in t applied column by column; `m` receives `lambda` and
/// whether the bin is the Nyquist bin.
pub fn apply_t_multiplier<M>(f: &GridField, m: M) -> Result<GridField>
where
    M: Fn(f64, bool) -> C64 + Sync,
{
    let spec = &f.spec;
    if !spec.t_periodic {
        return Err(Error::SpecMismatch("t multipliers need a periodic t axis".into()));
    }
    let n = spec.n_t;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let sym: Vec<C64> = (0..n)
        .map(|b| m(std::f64::consts::PI * signed_bin(b, n) as f64 / spec.t_half, b == n / 2))
        .collect();
    if sym.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("t multiplier not finite".into()));
    }
    let mut vals = f.values.clone();
    vals.par_chunks_mut(n).for_each(|c| {
        fwd.process(c);
        for (v, s) in c.iter_mut().zip(&sym) {
            *v *= s / n as f64;
        }
        inv.process(c);
    });
    Ok(GridField { spec: spec.clone(), values: vals })
}

/// Largest singular value of a linear map by power iteration on `A* A`.
pub fn power_iteration<A, B>(spec: &GridSpec, apply: A, adjoint: B, iters: usize, seed: u64) -> f64
where
    A: Fn(&GridField) -> GridField,
    B: Fn(&GridField) -> GridField,
{
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = GridField::from_values(spec, (0..spec.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect())
        .expect("finite random field");
    let n0 = v.l2();
    v = v.scale(1.0 / n0);
    let mut est = 0.0;
    for _ in 0..iters {
        let w = adjoint(&apply(&v));
        let nw = w.l2();
        if nw == 0.0 {
            return 0.0;
        }
        est = nw.sqrt();
        v = w.scale(1.0 / nw);
    }
    est
}

/// A cluster of eigenvalues of one mode, weighted by the local density at the origin.
#[derive(Clone, Debug, Serialize)]
pub struct FanCluster {
    pub energy: f64,
    pub weight: f64,
}

/// Landau-type clusters of the twisted Laplacian at a mode, detected through
/// the spectral measure of the origin delta (edge states carry little weight there).
pub fn fan_clusters(calc: &SpectralCalculus, bin: usize, rel_weight_floor: f64) -> Vec<FanCluster> {
    let m = &calc.modes[bin];
    let spec = &calc.spec;
    let zi = spec.zi_from_ints(&vec![0; spec.zdim()]).expect("origin node");
    let w: Vec<f64> = (0..m.evals.len()).map(|i| m.evecs[(zi, i)].norm_sqr()).collect();
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> =
        m.evals.iter().zip(&w).filter(|(_, &ww)| ww > rel_weight_floor * wmax).map(|(&e, &ww)| (e, ww)).collect();
    // gap-based clustering in sorted order
    let mut clusters: Vec<Vec<(f64, f64)>> = Vec::new();
    let scale = m.lambda.abs() * 4.0 * spec.nu as f64;
    for p in pts {
        match clusters.last_mut() {
            Some(c) if p.0 - c.last().expect("nonempty").0 < scale => c.push(p),
            _ => clusters.push(vec![p]),
        }
    }
    clusters
        .into_iter()
        .map(|c| {
            let tw: f64 = c.iter().map(|p| p.1).sum();
            FanCluster { energy: c.iter().map(|p| p.0 * p.1).sum::<f64>() / tw, weight: tw }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GridSpec {
        GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap()
    }

    #[test]
    fn identity_and_parseval() {
        let spec = small();
        let calc = SpectralCalculus::build(&spec).unwrap();
        let f = GridField::from_fn(&spec, |z, t| C64::new((z[0] * 1.3 + t).sin(), z[1] * 0.2));
        let g = calc.apply_real(&f, |_, _| 1.0).unwrap();
        let err = f.sub(&g).unwrap().l2() / f.l2();
        assert!(err < 1e-12, "{err}");
        let c = calc.forward(&f).unwrap();
        let e: f64 = calc.mode_energies(&c).iter().sum();
        assert!((e - f.l2().powi(2)).abs() < 1e-10 * e);
    }

    #[test]
    fn matches_stencil() {
        let spec = small();
        let calc = SpectralCalculus::build(&spec).unwrap();
        let f = GridField::from_real_fn(&spec, |z, t| (-(z[0] * z[0] + z[1] * z[1]) - 0.1 * t * t).exp());
        let a = crate::fields::sublaplacian(&f);
        let b = calc.apply_real(&f, |mu, _| mu).unwrap();
        let err = a.sub(&b).unwrap().l2() / a.l2();
        assert!(err < 1e-12, "{err}");
    }
}
