//! Particles, atoms and the constructive atomic decomposition.
//!
//! A particle is `a = L^M Delta^N b` with `b` supported in an enlarged adapted
//! rectangle. The decomposition follows the area-function level sets: each
//! cell `(g, r, s)` of the discrete scale plane belongs to the tent of the
//! rectangle of levels `(j(r), j'(r, s))` containing `g`, each rectangle is
//! filed under the level `l` where its enlargement stops being dense in
//! `{S f > 2^l}`, and the atom at level `l` is the reproducing formula
//! restricted to the tents filed there.

use crate::averaging::{tube_sum_at, ColumnPrefix};
use crate::error::{Error, Result};
use crate::fields::{central_laplacian, lp_norm, sublaplacian, GridField, GridSet, GridSpec, C64};
use crate::operators::{
    area_fn, flag_maximal, grand_maximal, pair_response, square_cts, DecayBounds, FilterPair, GrandMember, ScaleBand,
    ScaleGrid,
};
use crate::spectral::{Coeffs, SpectralCalculus};
use crate::tiling::{enlarge, sample_keys, tube_contains, AdaptedRect, RectKey, Tube};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

pub const DEFAULT_KAPPA: f64 = 3.0;

/// Homogeneous dimension `2 nu + 2`.
fn hom_dim(nu: usize) -> i32 {
    2 * nu as i32 + 2
}

/// `(2^{2nu} kappa^D (5 nu + 2))^{-1}`, the threshold defining the enlarged level sets.
pub fn default_alpha(nu: usize, kappa: f64) -> f64 {
    1.0 / (4f64.powi(nu as i32) * kappa.powi(hom_dim(nu)) * (5 * nu + 2) as f64)
}

fn check_orders(nu: usize, m: usize, n: usize) -> Result<()> {
    if 2 * m <= nu {
        return Err(Error::Domain(format!("particle order M = {m} must exceed nu / 2 = {}", nu as f64 / 2.0)));
    }
    if n < 1 {
        return Err(Error::Domain("particle order N must be at least 1".into()));
    }
    Ok(())
}

/// Samples inside `tube`; on periodic grids every t-image counts.
pub fn tube_mask(spec: &GridSpec, tube: &Tube) -> Vec<bool> {
    let cz = tube.center.packed_z();
    let ct = tube.center.t;
    let (r, s) = (tube.radius, tube.half_height);
    let period = 2.0 * spec.t_half;
    let reach = if spec.t_periodic { ((r * r + s) / period).ceil() as i64 + 2 } else { 0 };
    let nt = spec.n_t;
    let mut mask = vec![false; spec.len()];
    mask.par_chunks_mut(nt).enumerate().for_each(|(zi, col)| {
        let z = spec.z_coords(zi);
        for (k, m) in col.iter_mut().enumerate() {
            let t = spec.t_coord(k);
            *m = (-reach..=reach).any(|w| tube_contains(&cz, ct, r, s, &z, t + w as f64 * period));
        }
    });
    mask
}

/// `L^M Delta^N b` with the grid's finite-difference operators.
pub fn particle_operator(b: &GridField, m: usize, n: usize) -> GridField {
    let mut a = b.clone();
    for _ in 0..n {
        a = central_laplacian(&a);
    }
    for _ in 0..m {
        a = sublaplacian(&a);
    }
    a
}

/// A particle `a_R = L^M Delta^N b_R`.
#[derive(Clone, Debug)]
pub struct Particle {
    pub rect: AdaptedRect,
    pub kappa: f64,
    pub b: GridField,
    pub a: GridField,
    pub m: usize,
    pub n: usize,
}

/// Build a particle, checking that `b` vanishes off `R^{*, kappa}`.
pub fn make_particle(b: &GridField, rect: &AdaptedRect, m: usize, n: usize, kappa: f64) -> Result<Particle> {
    let spec = &b.spec;
    if rect.nu() != spec.nu {
        return Err(Error::SpecMismatch(format!("rectangle in dimension {} on a nu = {} grid", rect.nu(), spec.nu)));
    }
    check_orders(spec.nu, m, n)?;
    let mask = tube_mask(spec, &enlarge(rect, kappa)?);
    let bad: Vec<usize> = (0..spec.len()).filter(|&i| !mask[i] && b.values[i].norm() > 0.0).collect();
    if !bad.is_empty() {
        return Err(Error::Support { count: bad.len(), first: bad.into_iter().take(16).collect() });
    }
    Ok(Particle { rect: rect.clone(), kappa, b: b.clone(), a: particle_operator(b, m, n), m, n })
}

impl Particle {
    /// `||b||_2 / (q^{2M} h^{2N} ||a||_2)`.
    pub fn norm_constant(&self) -> f64 {
        let q = self.rect.width();
        let h = self.rect.height();
        let a = self.a.l2();
        if a == 0.0 {
            return 0.0;
        }
        self.b.l2() / (q.powi(2 * self.m as i32) * h.powi(2 * self.n as i32) * a)
    }

    pub fn scaled(&self, c: f64) -> Particle {
        Particle { b: self.b.scale(c), a: self.a.scale(c), ..self.clone() }
    }

    /// Fraction of `||b||_2^2` carried by samples outside `R^{*, kappa}`.
    pub fn support_leak(&self) -> Result<f64> {
        let mask = tube_mask(&self.b.spec, &enlarge(&self.rect, self.kappa)?);
        let tot: f64 = self.b.values.iter().map(|v| v.norm_sqr()).sum();
        if tot == 0.0 {
            return Ok(0.0);
        }
        let out: f64 = self.b.values.iter().zip(&mask).filter(|(_, m)| !**m).map(|(v, _)| v.norm_sqr()).sum();
        Ok(out / tot)
    }
}

/// Particles attached to an open set `omega`.
#[derive(Clone, Debug)]
pub struct Atom {
    pub omega: GridSet,
    pub particles: Vec<Particle>,
}

/// Outcome of the randomized-sign check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomReport {
    pub n_particles: usize,
    pub n_signs: usize,
    pub seed: u64,
    pub omega_measure: f64,
    /// Largest `||sum sigma_R a_R||_2 |Omega|^{1/2}` over the draws.
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// `|Omega| sum ||a_R||_2^2`, when the particles are available.
    pub l2_sum: Option<f64>,
    pub l2_ok: Option<bool>,
}

fn random_signs(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Monte-Carlo check of the randomized-sign bound, with the `l^2` sufficient condition.
pub fn validate_atom(atom: &Atom, n_signs: usize, seed: u64) -> AtomReport {
    let om = atom.omega.measure();
    let l2: f64 = atom.particles.iter().map(|p| p.a.l2().powi(2)).sum::<f64>() * om;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(n_signs);
    if !atom.particles.is_empty() {
        for _ in 0..n_signs {
            let sg = random_signs(&mut rng, atom.particles.len());
            let mut acc = GridField::zeros(&atom.omega.spec);
            for (p, s) in atom.particles.iter().zip(&sg) {
                acc.axpy(C64::new(*s, 0.0), &p.a);
            }
            ratios.push(acc.l2() * om.sqrt());
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mean_ratio = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    AtomReport {
        n_particles: atom.particles.len(),
        n_signs,
        seed,
        omega_measure: om,
        max_ratio,
        mean_ratio,
        l2_sum: Some(l2),
        l2_ok: Some(l2 <= 1.0 + 1e-12),
    }
}

/// Parameters of [`atomic_decompose`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecomposeOptions {
    pub kappa: f64,
    /// Threshold for the enlarged level sets; `None` means [`default_alpha`].
    pub alpha: Option<f64>,
    pub m: usize,
    pub n: usize,
    pub max_levels: usize,
    /// Apertures of the area function defining the level sets.
    pub beta: f64,
    pub gamma: f64,
}

impl DecomposeOptions {
    pub fn for_nu(nu: usize) -> Self {
        Self { kappa: DEFAULT_KAPPA, alpha: None, m: nu / 2 + 1, n: 1, max_levels: 32, beta: 1.0, gamma: 1.0 }
    }
}

/// Levels `(j, j')` of the tent holding the scale cell `(r, s)`: `r` in `(q/b, q]`
/// and `s` in `(h/b^2, h]`, or `s` up to the tile height when `j' = j`.
pub fn tent_levels(nu: usize, r: f64, s: f64) -> (i32, i32) {
    let b = (2 * nu + 1) as f64;
    let j = (r.ln() / b.ln() - 1e-9).ceil() as i32;
    let tile_h = b.powi(2 * j) / (2 * nu) as f64;
    if s <= tile_h * (1.0 + 1e-12) {
        return (j, j);
    }
    let jp = (0.5 * (2.0 * nu as f64 * s).ln() / b.ln() - 1e-9).ceil() as i32;
    (j, jp.max(j))
}

/// `|T(g, r, s)| = 2^{2nu+1} r^{2nu} (r^2 + s)`.
fn tube_volume(nu: usize, r: f64, s: f64) -> f64 {
    2f64.powi(2 * nu as i32 + 1) * r.powi(2 * nu as i32) * (r * r + s)
}

/// The atom filed at one level.
#[derive(Clone, Debug)]
pub struct LevelAtom {
    pub level: i32,
    pub lambda: f64,
    /// The enlarged set the atom is normalised against.
    pub omega: GridSet,
    /// `|{S f > 2^l}|`.
    pub base_measure: f64,
    pub atom: GridField,
    /// Indices into [`AtomicDecomposition::rect_keys`].
    pub rects: Vec<usize>,
    pub cells: usize,
}

#[derive(Clone, Debug)]
struct ScaleCells {
    r: f64,
    s: f64,
    response: GridField,
    /// Rectangle index of every sample's tent cell.
    rect: Vec<u32>,
}

/// `f = sum_l lambda_l a_l + residual`.
#[derive(Clone, Debug)]
pub struct AtomicDecomposition {
    pub spec: GridSpec,
    pub levels: Vec<LevelAtom>,
    pub residual: GridField,
    pub kappa: f64,
    pub alpha: f64,
    pub m: usize,
    pub n: usize,
    pub scale_band: Option<ScaleBand>,
    pub area_l1: f64,
    pub rect_keys: Vec<RectKey>,
    /// Cells whose tube is too small for the density threshold of their rectangle.
    pub tent_factor_violations: usize,
    pub total_cells: usize,
    pub notes: Vec<String>,
    pair: Option<FilterPair>,
    cells: Vec<ScaleCells>,
    rect_level: Vec<usize>,
}

impl AtomicDecomposition {
    fn empty(f: &GridField, opts: &DecomposeOptions, alpha: f64) -> Self {
        Self {
            spec: f.spec.clone(),
            levels: Vec::new(),
            residual: f.clone(),
            kappa: opts.kappa,
            alpha,
            m: opts.m,
            n: opts.n,
            scale_band: None,
            area_l1: 0.0,
            rect_keys: Vec::new(),
            tent_factor_violations: 0,
            total_cells: 0,
            notes: Vec::new(),
            pair: None,
            cells: Vec::new(),
            rect_level: Vec::new(),
        }
    }

    pub fn lambda_sum(&self) -> f64 {
        self.levels.iter().map(|l| l.lambda.abs()).sum()
    }

    pub fn level_values(&self) -> Vec<i32> {
        self.levels.iter().map(|l| l.level).collect()
    }

    fn need_cells(&self) -> Result<&FilterPair> {
        self.pair.as_ref().ok_or_else(|| Error::Domain("tent data is not available for a loaded decomposition".into()))
    }

    /// The particle `(a_{l,R}, b_{l,R})` for the `which`-th rectangle of level index `li`.
    /// `b` comes from the symbol `psi / (mu^M delta^N)` and is not compactly supported;
    /// see [`Particle::support_leak`].
    pub fn particle(&self, calc: &SpectralCalculus, li: usize, which: usize) -> Result<Particle> {
        let pair = self.need_cells()?;
        let lv = self.levels.get(li).ok_or_else(|| Error::Domain(format!("no level index {li}")))?;
        let gid = *lv.rects.get(which).ok_or_else(|| Error::Domain(format!("no rectangle {which} at level {}", lv.level)))?;
        let dt = self.spec.dt();
        let (m, n) = (self.m as i32, self.n as i32);
        let mut ca: Option<Coeffs> = None;
        let mut cb: Option<Coeffs> = None;
        for sc in &self.cells {
            if !sc.rect.iter().any(|&g| g as usize == gid) {
                continue;
            }
            let g = masked_cells(&sc.response, &sc.rect, |id| id as usize == gid, 1.0);
            let c = calc.forward(&g)?;
            let (r, s) = (sc.r, sc.s);
            let sa = calc.scale_coeffs(&c, &|mu, l| C64::new(pair.symbol(r, s, mu, l), 0.0))?;
            let sb = calc.scale_coeffs(&c, &|mu, l| {
                let d = (2.0 - 2.0 * (l * dt).cos()) / (dt * dt);
                let p = pair.symbol(r, s, mu, l);
                if p == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(p / (mu.powi(m) * d.powi(n)), 0.0)
                }
            })?;
            add_coeffs(&mut ca, sa);
            add_coeffs(&mut cb, sb);
        }
        let inv = 1.0 / lv.lambda;
        let a = ca.map(|c| calc.inverse(&c).scale(inv)).unwrap_or_else(|| GridField::zeros(&self.spec));
        let b = cb.map(|c| calc.inverse(&c).scale(inv)).unwrap_or_else(|| GridField::zeros(&self.spec));
        Ok(Particle { rect: AdaptedRect::from_key(self.rect_keys[gid].clone())?, kappa: self.kappa, b, a, m: self.m, n: self.n })
    }

    /// Every particle of level index `li` as an explicit [`Atom`].
    pub fn level_atom(&self, calc: &SpectralCalculus, li: usize, max_particles: usize) -> Result<Atom> {
        let lv = self.levels.get(li).ok_or_else(|| Error::Domain(format!("no level index {li}")))?;
        if lv.rects.len() > max_particles {
            return Err(Error::SizeLimit(format!("level {} has {} particles", lv.level, lv.rects.len())));
        }
        let particles = (0..lv.rects.len()).map(|w| self.particle(calc, li, w)).collect::<Result<Vec<_>>>()?;
        Ok(Atom { omega: lv.omega.clone(), particles })
    }

    /// Randomized-sign check of the level atom, flipping whole tents at once.
    pub fn level_sign_check(&self, calc: &SpectralCalculus, li: usize, n_signs: usize, seed: u64) -> Result<AtomReport> {
        let pair = self.need_cells()?;
        let lv = self.levels.get(li).ok_or_else(|| Error::Domain(format!("no level index {li}")))?;
        let mut pos = vec![usize::MAX; self.rect_keys.len()];
        for (w, &g) in lv.rects.iter().enumerate() {
            pos[g] = w;
        }
        let om = lv.omega.measure();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut ratios = Vec::with_capacity(n_signs);
        for _ in 0..n_signs {
            let sg = random_signs(&mut rng, lv.rects.len());
            let mut acc: Option<Coeffs> = None;
            for sc in &self.cells {
                let vals: Vec<C64> = sc
                    .response
                    .values
                    .iter()
                    .zip(&sc.rect)
                    .map(|(v, &g)| {
                        let p = pos[g as usize];
                        if p == usize::MAX {
                            C64::new(0.0, 0.0)
                        } else {
                            *v * sg[p]
                        }
                    })
                    .collect();
                if vals.iter().all(|v| v.norm_sqr() == 0.0) {
                    continue;
                }
                let c = calc.forward(&GridField { spec: self.spec.clone(), values: vals })?;
                let (r, s) = (sc.r, sc.s);
                add_coeffs(&mut acc, calc.scale_coeffs(&c, &|mu, l| C64::new(pair.symbol(r, s, mu, l), 0.0))?);
            }
            let norm = acc.map(|c| calc.inverse(&c).l2()).unwrap_or(0.0) / lv.lambda;
            ratios.push(norm * om.sqrt());
        }
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        let mean_ratio = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
        Ok(AtomReport {
            n_particles: lv.rects.len(),
            n_signs,
            seed,
            omega_measure: om,
            max_ratio,
            mean_ratio,
            l2_sum: None,
            l2_ok: None,
        })
    }
}

fn add_coeffs(acc: &mut Option<Coeffs>, c: Coeffs) {
    match acc {
        None => *acc = Some(c),
        Some(a) => {
            for (x, y) in a.data.iter_mut().zip(c.data) {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
            }
        }
    }
}

fn masked_cells<P: Fn(u32) -> bool>(f: &GridField, rect: &[u32], keep: P, scale: f64) -> GridField {
    let values = f.values.iter().zip(rect).map(|(v, &g)| if keep(g) { *v * scale } else { C64::new(0.0, 0.0) }).collect();
    GridField { spec: f.spec.clone(), values }
}

/// Sample nearest to `(z, t)`, clamped into the box.
fn nearest_clamped(spec: &GridSpec, z: &[f64], t: f64) -> (usize, usize) {
    let dz = spec.dz();
    let half = (spec.n_z / 2) as i64;
    let ints: Vec<i64> = z.iter().map(|v| ((v / dz).round() as i64).clamp(-half, half - 1)).collect();
    let zi = spec.zi_from_ints(&ints).expect("clamped indices lie on the grid");
    let kf = ((t + spec.t_half) / spec.dt()).round() as i64;
    let k = if spec.t_periodic { kf.rem_euclid(spec.n_t as i64) } else { kf.clamp(0, spec.n_t as i64 - 1) };
    (zi, k as usize)
}

/// Decompose `f` into atoms along the level sets of its area function.
///
/// `pair` serves both as analysing and synthesising family, so the scale grid
/// must make `sum pair.symbol^2 = 1` on the spectrum of `f`; otherwise the
/// uncovered part lands in the residual and a note is recorded.
pub fn atomic_decompose(
    f: &GridField,
    calc: &SpectralCalculus,
    pair: &FilterPair,
    scales: &ScaleGrid,
    opts: &DecomposeOptions,
) -> Result<AtomicDecomposition> {
    let spec = &f.spec;
    calc.spec.check_same(spec)?;
    let nu = spec.nu;
    check_orders(nu, opts.m, opts.n)?;
    if !(opts.kappa >= 1.0) {
        return Err(Error::Domain(format!("kappa must be at least 1, got {}", opts.kappa)));
    }
    let alpha = opts.alpha.unwrap_or_else(|| default_alpha(nu, opts.kappa));
    let mut d = AtomicDecomposition::empty(f, opts, alpha);
    if f.l2() == 0.0 {
        return Ok(d);
    }
    d.scale_band = Some(scales.band());
    d.pair = Some(pair.clone());

    let area = area_fn(f, calc, pair, opts.beta, opts.gamma, scales)?;
    d.area_l1 = lp_norm(&area, 1.0);
    let sv = area.re();
    let pos_min = sv.iter().cloned().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        d.notes.push("area function vanishes; everything is residual".into());
        return Ok(d);
    }
    let hi = max.log2().ceil() as i32;
    let mut lo = pos_min.log2().floor() as i32;
    if (hi - lo + 1) as usize > opts.max_levels {
        d.notes.push(format!("levels {lo}..{} clipped to {} levels", hi, opts.max_levels));
        lo = hi - opts.max_levels as i32 + 1;
    }
    let n_lv = (hi - lo + 1) as usize;
    let omega: Vec<Vec<bool>> =
        (0..n_lv).map(|i| sv.iter().map(|&v| v > 2f64.powi(lo + i as i32)).collect()).collect();
    let prefixes: Vec<ColumnPrefix> = omega
        .iter()
        .map(|m| ColumnPrefix::new(spec, &m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
        .collect();
    let dens = 1.0 / (3.0 * opts.kappa.powi(hom_dim(nu)));

    let c = calc.forward(f)?;
    let mut groups: Vec<((i32, i32), Vec<(f64, f64)>)> = Vec::new();
    for (r, s) in scales.pairs() {
        let key = tent_levels(nu, r, s);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push((r, s)),
            None => groups.push((key, vec![(r, s)])),
        }
    }

    let mut index: HashMap<RectKey, usize> = HashMap::new();
    let mut fallback = 0usize;
    for ((j, jp), members) in &groups {
        let keys = sample_keys(spec, *j, *jp)?;
        let mut fresh: Vec<RectKey> = Vec::new();
        for k in &keys {
            if !index.contains_key(k) {
                index.insert(k.clone(), usize::MAX);
                fresh.push(k.clone());
            }
        }
        let probe = AdaptedRect::from_key(keys[0].clone())?;
        let (q, h) = (probe.width(), probe.height());
        let (rs, ss) = (opts.kappa * q / 2.0, opts.kappa * opts.kappa * (4.0 * h + q * q) / 8.0);
        let star = tube_volume(nu, rs, ss);
        let filed: Vec<Result<Option<usize>>> = fresh
            .par_iter()
            .map(|k| {
                let rect = AdaptedRect::from_key(k.clone())?;
                let (zi, kk) = nearest_clamped(spec, &rect.center.packed_z(), rect.center.t);
                let frac = |i: usize| {
                    let (a, n) = tube_sum_at(spec, &prefixes[i], zi, kk, rs, ss);
                    if n > 0.0 {
                        a / n
                    } else {
                        0.0
                    }
                };
                if frac(0) <= dens {
                    return Ok(None);
                }
                // largest level whose set is still dense in R*
                let (mut a, mut b) = (0usize, n_lv - 1);
                while a < b {
                    let mid = (a + b).div_ceil(2);
                    if frac(mid) > dens {
                        a = mid;
                    } else {
                        b = mid - 1;
                    }
                }
                Ok(Some(a))
            })
            .collect();
        for (k, lv) in fresh.into_iter().zip(filed) {
            let lv = match lv? {
                Some(l) => l,
                None => {
                    fallback += 1;
                    0
                }
            };
            let gid = d.rect_keys.len();
            index.insert(k.clone(), gid);
            d.rect_keys.push(k);
            d.rect_level.push(lv);
        }
        let rect: Vec<u32> = keys.iter().map(|k| index[k] as u32).collect();
        for &(r, s) in members {
            if dens * star > 0.5 * tube_volume(nu, r, s) {
                d.tent_factor_violations += spec.len();
            }
            d.total_cells += spec.len();
            let response = pair_response(calc, &c, pair, r, s)?;
            d.cells.push(ScaleCells { r, s, response, rect: rect.clone() });
        }
    }
    if fallback > 0 {
        d.notes.push(format!("{fallback} rectangles never dense in any level set; filed at level {lo}"));
    }

    let dv = spec.dv();
    let mut energy = vec![0.0f64; n_lv];
    for sc in &d.cells {
        for (v, &g) in sc.response.values.iter().zip(&sc.rect) {
            energy[d.rect_level[g as usize]] += v.norm_sqr() * dv;
        }
    }
    let mf_scales = ScaleGrid::for_spec(spec);
    let mut slot = vec![usize::MAX; n_lv];
    let mut recon = GridField::zeros(spec);
    for li in 0..n_lv {
        let level = lo + li as i32;
        if energy[li] == 0.0 {
            d.notes.push(format!("level {level} skipped: no tent carries energy"));
            continue;
        }
        let base = GridSet::new(spec, omega[li].clone())?;
        if base.count() == 0 || base.count() == spec.len() {
            d.notes.push(format!("level {level}: degenerate level set ({} of {} samples)", base.count(), spec.len()));
        }
        let mf = flag_maximal(&base.indicator(), &mf_scales);
        let mask: Vec<bool> = mf.values.iter().zip(&base.mask).map(|(v, &b)| b || v.re > alpha).collect();
        let om = GridSet::new(spec, mask)?;
        let lambda = energy[li].sqrt() * om.measure().sqrt();
        if !(lambda > 0.0) {
            d.notes.push(format!("level {level} skipped: empty enlarged set"));
            continue;
        }
        let mut acc: Option<Coeffs> = None;
        for sc in &d.cells {
            let g = masked_cells(&sc.response, &sc.rect, |id| d.rect_level[id as usize] == li, 1.0);
            if g.values.iter().all(|v| v.norm_sqr() == 0.0) {
                continue;
            }
            let cg = calc.forward(&g)?;
            let (r, s) = (sc.r, sc.s);
            add_coeffs(&mut acc, calc.scale_coeffs(&cg, &|mu, l| C64::new(pair.symbol(r, s, mu, l), 0.0))?);
        }
        let atom = acc.map(|c| calc.inverse(&c).scale(1.0 / lambda)).unwrap_or_else(|| GridField::zeros(spec));
        recon.axpy(C64::new(lambda, 0.0), &atom);
        slot[li] = d.levels.len();
        d.levels.push(LevelAtom {
            level,
            lambda,
            omega: om,
            base_measure: base.measure(),
            atom,
            rects: Vec::new(),
            cells: 0,
        });
    }
    for (gid, &li) in d.rect_level.iter().enumerate() {
        if slot[li] != usize::MAX {
            d.levels[slot[li]].rects.push(gid);
        }
    }
    for sc in &d.cells {
        for &g in &sc.rect {
            let s = slot[d.rect_level[g as usize]];
            if s != usize::MAX {
                d.levels[s].cells += 1;
            }
        }
    }
    d.rect_level = d.rect_level.iter().map(|&li| slot[li]).collect();
    // drop rectangles whose tents carry nothing from the level lists
    let mut live = vec![false; d.rect_keys.len()];
    for sc in &d.cells {
        for (v, &g) in sc.response.values.iter().zip(&sc.rect) {
            if v.norm_sqr() > 0.0 {
                live[g as usize] = true;
            }
        }
    }
    for lv in d.levels.iter_mut() {
        lv.rects.retain(|&g| live[g]);
    }
    d.residual = f.sub(&recon)?;
    let rel = d.residual.l2() / f.l2();
    if rel > 1e-6 {
        d.notes.push(format!("scale band leaves relative residual {rel:.3e}"));
    }
    Ok(d)
}

/// `sum_l lambda_l a_l + residual`.
pub fn reconstruct(d: &AtomicDecomposition) -> GridField {
    let mut out = d.residual.clone();
    for lv in &d.levels {
        out.axpy(C64::new(lv.lambda, 0.0), &lv.atom);
    }
    out
}

#[derive(Serialize, Deserialize)]
struct LevelEntry {
    level: i32,
    lambda: f64,
    omega_measure: f64,
    base_measure: f64,
    n_rects: usize,
    cells: usize,
    atom_file: String,
    omega_file: String,
    rects_file: String,
    particle_files: Vec<[String; 2]>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: String,
    spec: GridSpec,
    kappa: f64,
    alpha: f64,
    m: usize,
    n: usize,
    scale_band: Option<ScaleBand>,
    area_l1: f64,
    lambda_sum: f64,
    residual_l2: f64,
    tent_factor_violations: usize,
    total_cells: usize,
    notes: Vec<String>,
    levels: Vec<LevelEntry>,
    residual_file: String,
}

impl AtomicDecomposition {
    /// Write `manifest.json`, one `.hfld` per level atom and enlarged set, the
    /// residual, rectangle CSVs, and `a`/`b` files for up to `max_particles`
    /// particles per level (needs `calc` for those).
    pub fn write_dir(&self, dir: &Path, calc: Option<&SpectralCalculus>, max_particles: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut levels = Vec::new();
        for (li, lv) in self.levels.iter().enumerate() {
            let atom_file = format!("atom_{}.hfld", lv.level);
            let omega_file = format!("omega_{}.hfld", lv.level);
            let rects_file = format!("rects_{}.csv", lv.level);
            lv.atom.write_hfld(&dir.join(&atom_file))?;
            lv.omega.write_hfld(&dir.join(&omega_file))?;
            let rects = lv
                .rects
                .iter()
                .map(|&g| AdaptedRect::from_key(self.rect_keys[g].clone()))
                .collect::<Result<Vec<_>>>()?;
            std::fs::write(dir.join(&rects_file), crate::tiling::rects_to_csv(&rects))?;
            let mut particle_files = Vec::new();
            if let (Some(calc), true) = (calc, self.pair.is_some()) {
                for w in 0..lv.rects.len().min(max_particles) {
                    let p = self.particle(calc, li, w)?;
                    let names = [format!("particle_{}_{w}_a.hfld", lv.level), format!("particle_{}_{w}_b.hfld", lv.level)];
                    p.a.write_hfld(&dir.join(&names[0]))?;
                    p.b.write_hfld(&dir.join(&names[1]))?;
                    particle_files.push(names);
                }
            }
            levels.push(LevelEntry {
                level: lv.level,
                lambda: lv.lambda,
                omega_measure: lv.omega.measure(),
                base_measure: lv.base_measure,
                n_rects: lv.rects.len(),
                cells: lv.cells,
                atom_file,
                omega_file,
                rects_file,
                particle_files,
            });
        }
        let residual_file = "residual.hfld".to_string();
        self.residual.write_hfld(&dir.join(&residual_file))?;
        let man = Manifest {
            version: crate::VERSION.into(),
            spec: self.spec.clone(),
            kappa: self.kappa,
            alpha: self.alpha,
            m: self.m,
            n: self.n,
            scale_band: self.scale_band,
            area_l1: self.area_l1,
            lambda_sum: self.lambda_sum(),
            residual_l2: self.residual.l2(),
            tent_factor_violations: self.tent_factor_violations,
            total_cells: self.total_cells,
            notes: self.notes.clone(),
            levels,
            residual_file,
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&man)?)?;
        Ok(())
    }

    /// Load levels, atoms and residual. Rectangle lists and tent data are not restored.
    pub fn read_dir(dir: &Path) -> Result<AtomicDecomposition> {
        let man: Manifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
        let residual = GridField::read_hfld(&dir.join(&man.residual_file))?;
        let opts = DecomposeOptions { kappa: man.kappa, m: man.m, n: man.n, ..DecomposeOptions::for_nu(man.spec.nu) };
        let mut d = AtomicDecomposition::empty(&residual, &opts, man.alpha);
        d.scale_band = man.scale_band;
        d.area_l1 = man.area_l1;
        d.tent_factor_violations = man.tent_factor_violations;
        d.total_cells = man.total_cells;
        d.notes = man.notes;
        for e in man.levels {
            let atom = GridField::read_hfld(&dir.join(&e.atom_file))?;
            let ind = GridField::read_hfld(&dir.join(&e.omega_file))?;
            let omega = GridSet::new(&ind.spec, ind.values.iter().map(|v| v.re != 0.0).collect())?;
            d.levels.push(LevelAtom {
                level: e.level,
                lambda: e.lambda,
                omega,
                base_measure: e.base_measure,
                atom,
                rects: Vec::new(),
                cells: e.cells,
            });
        }
        Ok(d)
    }
}

/// Operators whose particle tails are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailOperator {
    AreaFn,
    GrandMaximal,
    SquareCts,
}

impl FromStr for TailOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "area_fn" => Ok(Self::AreaFn),
            "grand_maximal" => Ok(Self::GrandMaximal),
            "square_cts" => Ok(Self::SquareCts),
            o => Err(Error::Config(format!("unknown operator '{o}'"))),
        }
    }
}

/// `(height(R)/height(S))^{d1} + (width(R)/width(S))^{d2}`.
pub fn rho(r: &AdaptedRect, s: &AdaptedRect, d1: f64, d2: f64) -> f64 {
    (r.height() / s.height()).powf(d1) + (r.width() / s.width()).powf(d2)
}

/// `int_{(S*)^c} |A a_R| / (rho_{3/2, 2M - D/2}(R, S) |R|^{1/2} ||a_R||_2)`.
pub fn grand_maximal_of_atom_tail(
    p: &Particle,
    s_rect: &AdaptedRect,
    op: TailOperator,
    calc: &SpectralCalculus,
    scales: &ScaleGrid,
) -> Result<f64> {
    if !p.rect.is_subset_of(s_rect) {
        return Err(Error::NotContained);
    }
    let a_norm = p.a.l2();
    if a_norm == 0.0 {
        return Ok(0.0);
    }
    let spec = &p.a.spec;
    let pair = FilterPair::partition_cts();
    let g = match op {
        TailOperator::AreaFn => area_fn(&p.a, calc, &pair, 1.0, 1.0, scales)?,
        TailOperator::SquareCts => square_cts(&p.a, calc, &pair, scales)?,
        TailOperator::GrandMaximal => grand_maximal(
            &p.a,
            calc,
            &[GrandMember::new(FilterPair::gaussian(), 1.0)],
            scales,
            &DecayBounds::default(),
        )?,
    };
    let inside = tube_mask(spec, &enlarge(s_rect, p.kappa)?);
    let tail: f64 = g.values.iter().zip(&inside).filter(|(_, m)| !**m).map(|(v, _)| v.norm()).sum::<f64>() * spec.dv();
    let d2 = 2.0 * p.m as f64 - hom_dim(spec.nu) as f64 / 2.0;
    let rh = rho(&p.rect, s_rect, 1.5, d2);
    Ok(tail / (rh * p.rect.measure().sqrt() * a_norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_levels_partition_scales() {
        // r in (1/3, 1] lands at width level 0, and s up to 1/2 in the tile
        assert_eq!(tent_levels(1, 1.0, 0.5), (0, 0));
        assert_eq!(tent_levels(1, 0.5, 0.25), (0, 0));
        assert_eq!(tent_levels(1, 1.0, 0.6), (0, 1));
        assert_eq!(tent_levels(1, 1.0, 4.5), (0, 1));
        assert_eq!(tent_levels(1, 1.0, 4.6), (0, 2));
        assert_eq!(tent_levels(1, 1.01, 0.1), (1, 1));
    }

    #[test]
    fn alpha_default() {
        assert!((default_alpha(1, 3.0) - 1.0 / (4.0 * 81.0 * 7.0)).abs() < 1e-18);
    }
}
