//! Test fields and the experiment drivers behind the command line.

use crate::atoms::{atomic_decompose, make_particle, DecomposeOptions, Particle};
use crate::error::{Error, Result};
use crate::fields::{lp_norm, GridField, GridSpec, C64};
use crate::group::{symplectic_packed, HPoint};
use crate::multiplier::{multiplier_pieces_applied, weighted_vs_sobolev, Multiplier2D, PieceRow, PsiPair, QuadSpec};
use crate::operators::{
    area_fn, grand_maximal, nontangential_maximal, pair_response, radial_maximal, remove_t_mean, riesz_l1_sum,
    square_dis, ConeSpec, DecayBounds, FilterPair, GrandMember, ScaleGrid,
};
use crate::spectral::SpectralCalculus;
use crate::tiling::{enlarge, AdaptedRect};
use crate::util::linear_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// `exp(-1 / (1 - x^2))` on `|x| < 1`, zero elsewhere.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// `exp(-|z|^2 / (2 wz^2) - t^2 / (2 wt^2))`.
pub fn gaussian_bump(spec: &GridSpec, wz: f64, wt: f64) -> GridField {
    GridField::from_real_fn(spec, |z, t| {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        (-r2 / (2.0 * wz * wz) - t * t / (2.0 * wt * wt)).exp()
    })
}

/// Sum of five Gaussian-times-Hermite terms (widths 1 in z, 2 in t) at random places, with the
/// t-mean of every column removed. The same seed gives the same continuum
/// function on every grid.
pub fn random_band_limited(spec: &GridSpec, seed: u64) -> GridField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let d = spec.zdim();
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..5)
        .map(|_| {
            let c = rng.random_range(-1.0..1.0);
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0) * spec.z_half / 2.0).collect();
            let t = rng.random_range(-1.0..1.0) * spec.t_half / 2.0;
            (c, z, t)
        })
        .collect();
    let f = GridField::from_real_fn(spec, |z, t| {
        terms
            .iter()
            .map(|(c, cz, ct)| {
                let r2: f64 = z.iter().zip(cz).map(|(a, b)| (a - b) * (a - b)).sum();
                let u = (t - ct) / 2.0;
                c * (-r2 / 2.0).exp() * (u * u - 1.0) * (-u * u / 2.0).exp()
            })
            .sum()
    });
    remove_t_mean(&f)
}

/// A particle on the rectangle of levels `(j, jp)` containing the origin, built
/// from a smooth bump filling most of `R^{*, kappa}` and scaled so that
/// `|R|^{1/2} ||a||_2 = 1`.
pub fn single_particle(spec: &GridSpec, j: i32, jp: i32, m: usize, n: usize, kappa: f64) -> Result<Particle> {
    let rect = AdaptedRect::containing(&HPoint::zero(spec.nu), j, jp)?;
    let tube = enlarge(&rect, kappa)?;
    let cz = tube.center.packed_z();
    let ct = tube.center.t;
    let rz = 0.9 * tube.radius;
    let rt = 0.9 * (tube.radius * tube.radius + tube.half_height);
    let period = 2.0 * spec.t_half;
    let b = GridField::from_real_fn(spec, |z, t| {
        let mut tau = t - ct - symplectic_packed(&cz, z);
        if spec.t_periodic {
            tau = (tau + spec.t_half).rem_euclid(period) - spec.t_half;
        }
        z.iter().zip(&cz).map(|(a, c)| bump((a - c) / rz)).product::<f64>() * bump(tau / rt)
    });
    let p = make_particle(&b, &rect, m, n, kappa)?;
    let norm = p.a.l2() * rect.measure().sqrt();
    if norm == 0.0 {
        return Err(Error::Numerical("particle vanishes on this grid".into()));
    }
    Ok(p.scaled(1.0 / norm))
}

/// `psi(z) phi(t)` with `phi >= 0` of unit mass on `(-1, 1)` and `psi` supported in
/// the unit ball with `int |psi| = 1`; `psi` is odd in `x_1` when `mean_zero`.
pub fn witness(spec: &GridSpec, mean_zero: bool) -> GridField {
    let psi = |z: &[f64]| {
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let b = bump(r);
        if mean_zero {
            z[0] * b
        } else {
            b
        }
    };
    let mut zsum = 0.0;
    for zi in 0..spec.n_zpts() {
        zsum += psi(&spec.z_coords(zi)).abs();
    }
    let mut tsum = 0.0;
    for k in 0..spec.n_t {
        tsum += bump(spec.t_coord(k));
    }
    let dzv = spec.dz().powi(spec.zdim() as i32);
    let c = 1.0 / (zsum * dzv * tsum * spec.dt());
    GridField::from_real_fn(spec, |z, t| c * psi(z) * bump(t))
}

/// Names of the functionals compared by [`equivalence_row`].
pub const FUNCTIONALS: [&str; 8] =
    ["atom_sum", "square_dis", "square_cts", "area", "radial", "nontangential", "grand_maximal", "riesz"];

/// Scale grids used by the equivalence experiment.
#[derive(Clone, Debug)]
pub struct EquivalenceScales {
    /// Covers the spectrum; used by square functions and the decomposition.
    pub square: ScaleGrid,
    /// Suprema of maximal functions.
    pub maximal: ScaleGrid,
}

impl EquivalenceScales {
    pub fn for_calc(calc: &SpectralCalculus) -> Self {
        Self { square: ScaleGrid::covering(calc), maximal: ScaleGrid::for_spec(&calc.spec) }
    }
}

/// The eight Hardy-norm functionals of `f`, in [`FUNCTIONALS`] order.
pub fn equivalence_row(f: &GridField, calc: &SpectralCalculus, sc: &EquivalenceScales) -> Result<[f64; 8]> {
    if f.l2() == 0.0 {
        return Ok([0.0; 8]);
    }
    let l1 = |g: &GridField| lp_norm(g, 1.0);
    let part = FilterPair::partition();
    let cts = FilterPair::partition_cts();
    let d = atomic_decompose(f, calc, &part, &sc.square, &DecomposeOptions::for_nu(f.spec.nu))?;
    let family = [GrandMember::new(FilterPair::flag_poisson(), 1.0), GrandMember::new(FilterPair::gaussian(), 1.0)];
    Ok([
        d.lambda_sum(),
        l1(&square_dis(f, calc, &part, &sc.square)?),
        l1(&area_fn(f, calc, &cts, 0.0, 0.0, &sc.square)?),
        l1(&area_fn(f, calc, &cts, 1.0, 1.0, &sc.square)?),
        l1(&radial_maximal(f, calc, &sc.maximal)?),
        l1(&nontangential_maximal(f, calc, ConeSpec::default(), &sc.maximal)?),
        l1(&grand_maximal(f, calc, &family, &sc.maximal, &DecayBounds::default())?),
        riesz_l1_sum(f, calc)?,
    ])
}

/// Min, median and max of one pairwise ratio over a corpus.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RatioSummary {
    pub num: String,
    pub den: String,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub count: usize,
}

/// Pairwise ratios `row[a] / row[b]` over rows where both are positive.
pub fn ratio_summary(rows: &[[f64; 8]]) -> Vec<RatioSummary> {
    let mut out = Vec::new();
    for a in 0..8 {
        for b in (a + 1)..8 {
            let mut v: Vec<f64> = rows.iter().filter(|r| r[a] > 0.0 && r[b] > 0.0).map(|r| r[a] / r[b]).collect();
            if v.is_empty() {
                continue;
            }
            v.sort_by(f64::total_cmp);
            let median = if v.len() % 2 == 1 { v[v.len() / 2] } else { 0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2]) };
            out.push(RatioSummary {
                num: FUNCTIONALS[a].into(),
                den: FUNCTIONALS[b].into(),
                min: v[0],
                median,
                max: v[v.len() - 1],
                count: v.len(),
            });
        }
    }
    out
}

/// Least-squares fit of a norm against `ln H`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Slope divided by the value at the smallest `H`.
    pub rel_slope: f64,
}

fn log_fit(hs: &[f64], v: &[f64]) -> LogFit {
    let x: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let (a, b, r2) = linear_fit(&x, v);
    LogFit { slope: b, intercept: a, r2, rel_slope: if v[0] != 0.0 { b / v[0] } else { 0.0 } }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubspaceRow {
    pub h: f64,
    /// `||u+||_1` of the mean-zero witness over `|t| <= H`.
    pub witness: f64,
    /// Same for the witness with a mean-nonzero `psi`.
    pub control: f64,
    /// One-parameter Poisson maximal function of the witness.
    pub one_param: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubspaceReport {
    pub rows: Vec<SubspaceRow>,
    pub witness_fit: LogFit,
    pub control_fit: LogFit,
    pub one_param_fit: LogFit,
}

/// `sup_r |f *_1 e^{-r sqrt(L)}|` with no central smoothing.
pub fn one_parameter_maximal(f: &GridField, calc: &SpectralCalculus, r_values: &[f64]) -> Result<GridField> {
    let pair = FilterPair::new("heisenberg_poisson", |x| (-x).exp(), |_| 1.0);
    let c = calc.forward(f)?;
    let mut best = vec![0.0f64; f.spec.len()];
    for &r in r_values {
        let u = pair_response(calc, &c, &pair, r, 1.0)?;
        for (b, v) in best.iter_mut().zip(&u.values) {
            *b = b.max(v.norm());
        }
    }
    Ok(GridField { spec: f.spec.clone(), values: best.into_iter().map(|x| C64::new(x, 0.0)).collect() })
}

fn l1_within(g: &GridField, h: f64) -> f64 {
    let spec = &g.spec;
    let nt = spec.n_t;
    g.values
        .iter()
        .enumerate()
        .filter(|(i, _)| spec.t_coord(i % nt).abs() <= h)
        .map(|(_, v)| v.norm())
        .sum::<f64>()
        * spec.dv()
}

/// Radial maximal norms of the witness over `|t| <= H` for each `H`, with fits in `ln H`.
pub fn proper_subspace(calc: &SpectralCalculus, hs: &[f64], scales: &ScaleGrid) -> Result<SubspaceReport> {
    let spec = &calc.spec;
    if hs.len() < 2 {
        return Err(Error::Config("need at least two values of H".into()));
    }
    if let Some(h) = hs.iter().find(|&&h| h > spec.t_half) {
        return Err(Error::Config(format!("H = {h} exceeds the grid's t extent {}", spec.t_half)));
    }
    let w = witness(spec, true);
    let ctl = witness(spec, false);
    let uw = radial_maximal(&w, calc, scales)?;
    let uc = radial_maximal(&ctl, calc, scales)?;
    let uo = one_parameter_maximal(&w, calc, &scales.r_values)?;
    let rows: Vec<SubspaceRow> = hs
        .iter()
        .map(|&h| SubspaceRow { h, witness: l1_within(&uw, h), control: l1_within(&uc, h), one_param: l1_within(&uo, h) })
        .collect();
    let col = |f: fn(&SubspaceRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(SubspaceReport {
        witness_fit: log_fit(hs, &col(|r| r.witness)),
        control_fit: log_fit(hs, &col(|r| r.control)),
        one_param_fit: log_fit(hs, &col(|r| r.one_param)),
        rows,
    })
}

/// Split of a particle's tail integral over the regions I to IV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RegionBudget {
    /// `S^*` and `R^*` in the frame where `R^* = T(o, 1, h)`.
    pub r_star: f64,
    pub h_star: f64,
    pub h: f64,
    pub tail: f64,
    pub region_1: f64,
    pub region_2_3: f64,
    pub region_4: f64,
    /// Part of `(S^*)^c` outside every region.
    pub uncovered: f64,
    pub budget: f64,
    pub rel_gap: f64,
}

/// Budget of `int_{(S^*)^c} (sum_{j,l} |m_{j,l} a_R|^2)^{1/2}` over the regions
/// `I = {|z| <= 1, |u| > h*}`, `II = {|z| > 1, |u| > max(h*, 8 nu (h + |z|))}`,
/// `III = {|z| > r*, |u| > 8 nu (h + |z|)}` and `IV = {|z| > r*, |u| <= 8 nu (h + |z|)}`.
#[allow(clippy::too_many_arguments)]
pub fn region_budget(
    calc: &SpectralCalculus,
    m: &Multiplier2D,
    p: &Particle,
    s_rect: &AdaptedRect,
    js: &[i32],
    ells: &[i32],
    psi: &PsiPair,
) -> Result<RegionBudget> {
    let spec = &calc.spec;
    let nu = spec.nu as f64;
    let pieces = multiplier_pieces_applied(calc, m, &p.a, js, ells, psi)?;
    let mut sq = vec![0.0f64; spec.len()];
    for (_, g) in &pieces {
        for (a, v) in sq.iter_mut().zip(&g.values) {
            *a += v.norm_sqr();
        }
    }
    let rstar_tube = enlarge(&p.rect, p.kappa)?;
    let s_tube = enlarge(s_rect, p.kappa)?;
    let rho = rstar_tube.radius;
    let h = rstar_tube.half_height / (rho * rho);
    let r_star = s_tube.radius / rho;
    let h_star = s_tube.half_height / (rho * rho);
    let s_mask = crate::atoms::tube_mask(spec, &s_tube);
    let cz = rstar_tube.center.packed_z();
    let ct = rstar_tube.center.t;
    let period = 2.0 * spec.t_half;
    let nt = spec.n_t;
    let dv = spec.dv();
    let mut acc = [0.0f64; 5];
    for i in 0..spec.len() {
        if s_mask[i] {
            continue;
        }
        let g = sq[i].sqrt() * dv;
        let z = spec.z_coords(i / nt);
        let mut u = spec.t_coord(i % nt) - ct - symplectic_packed(&cz, &z);
        if spec.t_periodic {
            u = (u + spec.t_half).rem_euclid(period) - spec.t_half;
        }
        let zr = z.iter().zip(&cz).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / rho;
        let u = u.abs() / (rho * rho);
        let wall = 8.0 * nu * (h + zr);
        acc[0] += g;
        if zr <= 1.0 && u > h_star {
            acc[1] += g;
        } else if (zr > 1.0 && u > h_star.max(wall)) || (zr > r_star && u > wall) {
            acc[2] += g;
        } else if zr > r_star && u <= wall {
            acc[3] += g;
        } else {
            acc[4] += g;
        }
    }
    let budget = acc[1] + acc[2] + acc[3];
    Ok(RegionBudget {
        r_star,
        h_star,
        h,
        tail: acc[0],
        region_1: acc[1],
        region_2_3: acc[2],
        region_4: acc[3],
        uncovered: acc[4],
        budget,
        rel_gap: if acc[0] > 0.0 { (budget - acc[0]).abs() / acc[0] } else { 0.0 },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MultiplierSummary {
    pub multiplier: String,
    pub eps: f64,
    pub max_ratio: f64,
    pub argmax: (i32, i32),
    pub rows: Vec<PieceRow>,
}

/// Weighted-kernel to Sobolev ratios of `m` over the `(j, l)` grid.
pub fn multiplier_summary(
    calc: &SpectralCalculus,
    m: &Multiplier2D,
    js: &[i32],
    ells: &[i32],
    eps: f64,
    quad: QuadSpec,
) -> Result<MultiplierSummary> {
    let rows = weighted_vs_sobolev(calc, m, js, ells, eps, quad)?;
    let best = rows
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or_else(|| Error::Config("empty piece grid".into()))?;
    Ok(MultiplierSummary {
        multiplier: m.name.clone(),
        eps,
        max_ratio: best.ratio,
        argmax: (best.j, best.ell),
        rows: rows.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_normalisation() {
        let spec = GridSpec::new(1, 1.5, 4.0, 12, 32, true).unwrap();
        for mz in [true, false] {
            let w = witness(&spec, mz);
            assert!((lp_norm(&w, 1.0) - 1.0).abs() < 1e-12);
        }
        assert!(witness(&spec, true).integral().norm() < 1e-12);
    }
}
