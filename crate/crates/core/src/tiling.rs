//! The self-similar tile grid, adapted rectangles, tubes and enlargements.
//!
//! The basic tile is `T_o = {(z, t) : z in [-1/2, 1/2)^{2nu}, f(z) - 1/(2nu) <= t < f(z)}`
//! where `f` is the fixed point of the subdivision
//! `delta_{2nu+1}(T_o) = union over digits d of d . T_o`.

use crate::error::{Error, Result};
use crate::fields::{GridSet, GridSpec};
use crate::group::{symplectic_packed, HPoint};
use crate::util::centered_divmod;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock, RwLock};

/// Memoized evaluator of the tile height function for one `nu`.
pub struct TileHeight {
    pub nu: usize,
    cache: RwLock<HashMap<(Vec<u64>, u64), f64>>,
}

/// Result of a converged height evaluation.
#[derive(Clone, Copy, Debug)]
pub struct HeightBracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

impl HeightBracket {
    pub fn value(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

const MAX_ITER: usize = 80;

impl TileHeight {
    pub fn new(nu: usize) -> Self {
        Self { nu, cache: RwLock::new(HashMap::new()) }
    }

    /// Shared evaluator for `nu`.
    pub fn shared(nu: usize) -> Arc<TileHeight> {
        static ALL: OnceLock<RwLock<HashMap<usize, Arc<TileHeight>>>> = OnceLock::new();
        let all = ALL.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(h) = all.read().expect("tile cache lock").get(&nu) {
            return h.clone();
        }
        let mut w = all.write().expect("tile cache lock");
        w.entry(nu).or_insert_with(|| Arc::new(TileHeight::new(nu))).clone()
    }

    /// Crude a priori range of `f`.
    pub fn global_bounds(&self) -> (f64, f64) {
        let n = self.nu as f64;
        let den = 4.0 * n * (n + 1.0);
        ((n + 1.0 - 4.0 * n * n * n) / den, (n + 1.0 + 4.0 * n * n * n) / den)
    }

    /// Iterate the digit expansion of `z` until the bracket is narrower than `tol`.
    pub fn bracket(&self, z: &[f64], tol: f64, max_iter: usize) -> Result<HeightBracket> {
        if !(tol > 0.0) {
            return Err(Error::Domain("tol must be positive".into()));
        }
        let nu = self.nu;
        let b = (2 * nu + 1) as f64;
        let b2 = b * b;
        let (glo, ghi) = self.global_bounds();
        let mut zk = z.to_vec();
        let mut d = vec![0.0; 2 * nu];
        let mut partial = 0.0;
        let mut scale = 1.0;
        let mut lo = glo;
        let mut hi = ghi;
        for it in 0..max_iter {
            for a in 0..2 * nu {
                let v = b * zk[a];
                d[a] = (v + 0.5).floor();
                zk[a] = v - d[a];
            }
            scale /= b2;
            partial += scale * ((nu + 1) as f64 + symplectic_packed(&d, &zk));
            lo = partial + scale * glo;
            hi = partial + scale * ghi;
            if hi - lo < tol {
                return Ok(HeightBracket { lo, hi, iterations: it + 1 });
            }
        }
        Err(Error::NoConvergence { lo, hi })
    }

    /// `f(z)` within `tol`, memoized.
    pub fn eval(&self, z: &[f64], tol: f64) -> Result<f64> {
        let key = (z.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), tol.to_bits());
        if let Some(v) = self.cache.read().expect("tile cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.bracket(z, tol, MAX_ITER)?.value();
        let mut w = self.cache.write().expect("tile cache lock");
        if w.len() > 4_000_000 {
            w.clear();
        }
        w.insert(key, v);
        Ok(v)
    }
}

/// `f(z)` for `z` in the base cube, within `tol`.
pub fn tile_height_fn(nu: usize, z: &[f64], tol: f64) -> Result<f64> {
    if z.len() != 2 * nu || z.iter().any(|v| !(-0.5..0.5).contains(v)) {
        return Err(Error::Domain("z must lie in [-1/2, 1/2)^{2 nu}".into()));
    }
    TileHeight::shared(nu).eval(z, tol)
}

/// Accuracy used when no boundary tolerance is requested.
const EXACT_TOL: f64 = 1e-13;

/// A tile `delta_{b^j}((m, k) . T_o)` with `b = 2nu+1`; `k = k2 / (2nu)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub struct TileId {
    pub level: i32,
    pub m: Vec<i64>,
    pub k2: i64,
}

impl TileId {
    pub fn nu(&self) -> usize {
        self.m.len() / 2
    }

    /// The translate `delta_{b^j}(m, k)`.
    pub fn lattice(&self) -> HPoint {
        let nu = self.nu();
        let s = ((2 * nu + 1) as f64).powi(self.level);
        let z: Vec<f64> = self.m.iter().map(|&v| v as f64 * s).collect();
        HPoint::from_packed(&z, s * s * self.k2 as f64 / (2 * nu) as f64)
    }

    pub fn width(&self) -> f64 {
        ((2 * self.nu() + 1) as f64).powi(self.level)
    }

    pub fn height(&self) -> f64 {
        let nu = self.nu();
        ((2 * nu + 1) as f64).powi(2 * self.level) / (2 * nu) as f64
    }

    /// The unique tile one level up containing this one.
    pub fn parent(&self) -> TileId {
        let nu = self.nu();
        let b = (2 * nu + 1) as i64;
        let mut mp = vec![0i64; 2 * nu];
        let mut dz = vec![0i64; 2 * nu];
        for a in 0..2 * nu {
            let (q, r) = centered_divmod(self.m[a], b);
            mp[a] = q;
            dz[a] = r;
        }
        // k = b^2 k' + d_t + b S(m', d_z); everything scaled by 2 nu
        let mut s = 0i64;
        for j in 0..nu {
            s += mp[nu + j] * dz[j] - mp[j] * dz[nu + j];
        }
        let s2 = 2 * nu as i64 * 4 * nu as i64 * s;
        let (kq, _) = centered_divmod(self.k2 - b * s2, b * b);
        TileId { level: self.level + 1, m: mp, k2: kq }
    }

    pub fn ancestor(&self, level: i32) -> TileId {
        let mut t = self.clone();
        while t.level < level {
            t = t.parent();
        }
        t
    }

    /// t-interval `[lo, hi)` of the tile's vertical fiber over `z` (which must project into the tile).
    pub fn fiber(&self, z: &[f64], th: &TileHeight) -> Result<(f64, f64)> {
        let nu = self.nu();
        let s = ((2 * nu + 1) as f64).powi(self.level);
        let zs: Vec<f64> = z.iter().map(|v| v / s).collect();
        let u: Vec<f64> = zs.iter().zip(&self.m).map(|(a, &m)| a - m as f64).collect();
        let mf: Vec<f64> = self.m.iter().map(|&v| v as f64).collect();
        let f = th.eval(&u, EXACT_TOL)?;
        let base = self.k2 as f64 / (2 * nu) as f64 + symplectic_packed(&mf, &zs);
        Ok((s * s * (base + f - 1.0 / (2 * nu) as f64), s * s * (base + f)))
    }
}

/// Outcome of a tile lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TileLoc {
    Tile(TileId),
    Boundary,
}

/// The level-`j` tile containing `g`. `tol` is measured in units of the tile's own
/// width (z) and height (t); `tol = 0` resolves every point by the half-open convention.
pub fn tile_locate(g: &HPoint, j: i32, tol: f64) -> Result<TileLoc> {
    let nu = g.nu();
    let th = TileHeight::shared(nu);
    locate_with(&th, &g.packed_z(), g.t, j, tol)
}

pub(crate) fn locate_with(th: &TileHeight, z: &[f64], t: f64, j: i32, tol: f64) -> Result<TileLoc> {
    let nu = th.nu;
    let s = ((2 * nu + 1) as f64).powi(j);
    let zs: Vec<f64> = z.iter().map(|v| v / s).collect();
    let ts = t / (s * s);
    let mut m = vec![0i64; 2 * nu];
    let mut u = vec![0.0; 2 * nu];
    for a in 0..2 * nu {
        let mm = (zs[a] + 0.5).floor();
        m[a] = mm as i64;
        u[a] = zs[a] - mm;
        if tol > 0.0 && (u[a] + 0.5 < tol || 0.5 - u[a] < tol) {
            return Ok(TileLoc::Boundary);
        }
    }
    let ftol = if tol > 0.0 { (tol * 0.1).min(EXACT_TOL.max(tol * 1e-3)) } else { EXACT_TOL };
    let f = th.eval(&u, ftol)?;
    let mf: Vec<f64> = m.iter().map(|&v| v as f64).collect();
    let w = 2.0 * nu as f64 * (ts - symplectic_packed(&mf, &zs) - f);
    let fl = w.floor();
    if tol > 0.0 {
        let frac = w - fl;
        if frac < tol * 2.0 * nu as f64 || 1.0 - frac < tol * 2.0 * nu as f64 {
            return Ok(TileLoc::Boundary);
        }
    }
    Ok(TileLoc::Tile(TileId { level: j, m, k2: fl as i64 + 1 }))
}

/// Index of the level-`j` cube containing `z` (half-open).
pub fn cube_index(z: &[f64], j: i32, nu: usize) -> Vec<i64> {
    let s = ((2 * nu + 1) as f64).powi(j);
    z.iter().map(|v| (v / s + 0.5).floor() as i64).collect()
}

fn cube_ancestor(c: &[i64], from: i32, to: i32, nu: usize) -> Vec<i64> {
    let b = (2 * nu + 1) as i64;
    let mut c = c.to_vec();
    for _ in from..to {
        for v in c.iter_mut() {
            *v = centered_divmod(*v, b).0;
        }
    }
    c
}

/// Identifies an adapted rectangle: a level-`j` cube under a level-`j'` tile.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub struct RectKey {
    pub j: i32,
    pub cube: Vec<i64>,
    pub tile: TileId,
}

impl RectKey {
    pub fn jp(&self) -> i32 {
        self.tile.level
    }

    pub fn ancestor(&self, j: i32, jp: i32) -> RectKey {
        let nu = self.cube.len() / 2;
        RectKey { j, cube: cube_ancestor(&self.cube, self.j, j, nu), tile: self.tile.ancestor(jp) }
    }

    /// Exact containment via nesting of cubes and tiles.
    pub fn contained_in(&self, o: &RectKey) -> bool {
        self.j <= o.j && self.jp() <= o.jp() && self.ancestor(o.j, o.jp()) == *o
    }
}

/// An adapted rectangle with its geometric data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptedRect {
    pub center: HPoint,
    pub width_level: i32,
    pub height_level: i32,
    pub key: RectKey,
}

impl AdaptedRect {
    /// The rectangle of levels `(j, j')` containing `g`.
    pub fn containing(g: &HPoint, j: i32, jp: i32) -> Result<AdaptedRect> {
        if jp < j {
            return Err(Error::Domain(format!("height level {jp} below width level {j}")));
        }
        let nu = g.nu();
        let th = TileHeight::shared(nu);
        let z = g.packed_z();
        let TileLoc::Tile(tile) = locate_with(&th, &z, g.t, jp, 0.0)? else {
            unreachable!("tol = 0 never reports a boundary")
        };
        Self::from_key(RectKey { j, cube: cube_index(&z, j, nu), tile })
    }

    pub fn from_key(key: RectKey) -> Result<AdaptedRect> {
        let nu = key.cube.len() / 2;
        let th = TileHeight::shared(nu);
        let q = ((2 * nu + 1) as f64).powi(key.j);
        let cz: Vec<f64> = key.cube.iter().map(|&c| c as f64 * q).collect();
        let (lo, hi) = key.tile.fiber(&cz, &th)?;
        Ok(AdaptedRect {
            center: HPoint::from_packed(&cz, 0.5 * (lo + hi)),
            width_level: key.j,
            height_level: key.jp(),
            key,
        })
    }

    pub fn nu(&self) -> usize {
        self.center.nu()
    }

    pub fn width(&self) -> f64 {
        ((2 * self.nu() + 1) as f64).powi(self.width_level)
    }

    pub fn height(&self) -> f64 {
        let nu = self.nu();
        ((2 * nu + 1) as f64).powi(2 * self.height_level) / (2 * nu) as f64
    }

    /// `|R| = q^{2nu} h`.
    pub fn measure(&self) -> f64 {
        self.width().powi(2 * self.nu() as i32) * self.height()
    }

    /// Membership test. The flag reports a point within `tol` of a boundary.
    pub fn contains(&self, g: &HPoint, tol: f64) -> Result<(bool, bool)> {
        let nu = self.nu();
        let z = g.packed_z();
        let q = self.width();
        let mut flagged = false;
        for (a, c) in self.key.cube.iter().enumerate() {
            let u = z[a] / q - *c as f64;
            if !(-0.5..0.5).contains(&u) {
                return Ok((false, false));
            }
            if tol > 0.0 && (u + 0.5 < tol || 0.5 - u < tol) {
                flagged = true;
            }
        }
        let th = TileHeight::shared(nu);
        match locate_with(&th, &z, g.t, self.height_level, tol)? {
            TileLoc::Boundary => Ok((false, true)),
            TileLoc::Tile(t) => Ok((t == self.key.tile, flagged)),
        }
    }

    /// `R^dagger`: the rectangle one level up in both width and height.
    pub fn dagger(&self) -> Result<AdaptedRect> {
        AdaptedRect::from_key(self.key.ancestor(self.width_level + 1, self.height_level + 1))
    }

    /// Containment between rectangles.
    pub fn is_subset_of(&self, o: &AdaptedRect) -> bool {
        self.key.contained_in(&o.key)
    }

    /// Smallest tube known to contain `R`.
    pub fn bounding_tube(&self) -> Tube {
        let q = self.width();
        let h = self.height();
        Tube { center: self.center.clone(), radius: q / 2.0, half_height: (4.0 * h + q * q) / 8.0 }
    }

    /// CSV row `(cx.., ct, j, j')`.
    pub fn csv_row(&self) -> String {
        let mut parts: Vec<String> = self.center.packed_z().iter().map(|v| format!("{v}")).collect();
        parts.push(format!("{}", self.center.t));
        parts.push(self.width_level.to_string());
        parts.push(self.height_level.to_string());
        parts.join(",")
    }

    /// Sample mask of the rectangle on a grid.
    pub fn sample_set(&self, spec: &GridSpec) -> GridSet {
        let r = self.clone();
        GridSet::from_fn(spec, move |z, t| r.contains(&HPoint::from_packed(z, t), 0.0).map(|x| x.0).unwrap_or(false))
    }
}

/// Write a rectangle list as CSV.
pub fn rects_to_csv(rects: &[AdaptedRect]) -> String {
    let mut out = String::new();
    if let Some(r) = rects.first() {
        let nu = r.nu();
        let mut head: Vec<String> = (1..=nu).map(|j| format!("cx{j}")).collect();
        head.extend((1..=nu).map(|j| format!("cy{j}")));
        head.push("ct".into());
        head.push("j".into());
        head.push("jp".into());
        out.push_str(&head.join(","));
        out.push('\n');
    }
    for r in rects {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `T(g, r, s) = g . B(o, r) . B2(0, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub center: HPoint,
    pub radius: f64,
    pub half_height: f64,
}

impl Tube {
    pub fn new(center: HPoint, radius: f64, half_height: f64) -> Result<Tube> {
        if !(radius > 0.0) || half_height < 0.0 {
            return Err(Error::Domain("tube needs r > 0 and s >= 0".into()));
        }
        Ok(Tube { center, radius, half_height })
    }

    pub fn measure(&self) -> f64 {
        tube_measure(self)
    }

    /// Open membership.
    pub fn contains(&self, g: &HPoint) -> bool {
        tube_contains(&self.center.packed_z(), self.center.t, self.radius, self.half_height, &g.packed_z(), g.t)
    }

    /// Exact inclusion `self` inside `o` (closures).
    pub fn is_inside(&self, o: &Tube) -> bool {
        let nu = self.center.nu();
        let c1 = self.center.packed_z();
        let c2 = o.center.packed_z();
        let dz: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a - b).collect();
        let dt = self.center.t - o.center.t - symplectic_packed(&c2, &c1);
        let dinf = dz.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d1: f64 = dz.iter().map(|v| v.abs()).sum();
        let r1 = self.radius;
        dinf + r1 <= o.radius * (1.0 + 1e-12)
            && dt.abs() + r1 * r1 + self.half_height + 4.0 * nu as f64 * r1 * d1
                <= (o.radius * o.radius + o.half_height) * (1.0 + 1e-12)
    }
}

/// Tube membership in packed coordinates.
#[inline]
pub fn tube_contains(cz: &[f64], ct: f64, r: f64, s: f64, z: &[f64], t: f64) -> bool {
    let mut m = 0.0f64;
    for (a, b) in z.iter().zip(cz) {
        m = m.max((a - b).abs());
    }
    if m >= r {
        return false;
    }
    let tau = t - ct - symplectic_packed(cz, z);
    tau.abs() < r * r + s
}

/// `|T(g, r, s)| = 2^{2nu+1} r^{2nu} (r^2 + s)`.
pub fn tube_measure(t: &Tube) -> f64 {
    let nu = t.center.nu() as i32;
    2f64.powi(2 * nu + 1) * t.radius.powi(2 * nu) * (t.radius * t.radius + t.half_height)
}

/// `R^{*, kappa} = T(cent, kappa q / 2, kappa^2 (4h + q^2) / 8)`.
pub fn enlarge(r: &AdaptedRect, kappa: f64) -> Result<Tube> {
    if !(kappa >= 1.0) {
        return Err(Error::Domain(format!("kappa must be at least 1, got {kappa}")));
    }
    let q = r.width();
    let h = r.height();
    Tube::new(r.center.clone(), kappa * q / 2.0, kappa * kappa * (4.0 * h + q * q) / 8.0)
}

/// An adapted rectangle `R` with `R` inside `T` and `T` inside `R^{*,(2nu+1)^2}`.
pub fn tube_to_rect(t: &Tube) -> Result<AdaptedRect> {
    let nu = t.center.nu();
    let b = (2 * nu + 1) as f64;
    let kappa = b * b;
    let jr = t.radius.log(b).floor() as i32;
    let jh_top = ((2.0 * nu as f64 * (t.radius * t.radius + t.half_height)).sqrt().log(b)).ceil() as i32 + 1;
    let mut best: Option<AdaptedRect> = None;
    // rectangles containing the centre or one of a few nearby points
    for j in (jr - 3)..=(jr + 1) {
        for jp in j..=jh_top.max(j) {
            let r = AdaptedRect::containing(&t.center, j, jp)?;
            if !r.bounding_tube().is_inside(t) {
                continue;
            }
            if !t.is_inside(&enlarge(&r, kappa)?) {
                continue;
            }
            let better = match &best {
                None => true,
                Some(o) => r.measure() > o.measure(),
            };
            if better {
                best = Some(r);
            }
        }
    }
    best.ok_or_else(|| Error::Numerical("no adapted rectangle sandwiches the tube".into()))
}

/// Levels searched for rectangles on a grid.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct LevelRange {
    pub j_min: i32,
    pub j_max: i32,
    pub jp_max: i32,
}

impl LevelRange {
    /// Widths from the grid step to the box, heights up to the box.
    pub fn for_grid(spec: &GridSpec) -> LevelRange {
        let b = (2 * spec.nu + 1) as f64;
        let j_min = spec.dz().log(b).ceil() as i32;
        let j_max = (2.0 * spec.z_half).log(b).floor() as i32;
        let jp_max = ((2.0 * spec.nu as f64 * 2.0 * spec.t_half).sqrt().log(b)).floor() as i32;
        LevelRange { j_min, j_max, jp_max: jp_max.max(j_max) }
    }

    pub fn pairs(&self) -> Vec<(i32, i32)> {
        let mut v = Vec::new();
        for j in self.j_min..=self.j_max {
            for jp in j..=self.jp_max {
                v.push((j, jp));
            }
        }
        v
    }
}

/// Per-sample rectangle keys at one level pair.
pub fn sample_keys(spec: &GridSpec, j: i32, jp: i32) -> Result<Vec<RectKey>> {
    use rayon::prelude::*;
    let nu = spec.nu;
    let th = TileHeight::shared(nu);
    let nt = spec.n_t;
    (0..spec.len())
        .into_par_iter()
        .map(|idx| {
            let z = spec.z_coords(idx / nt);
            let t = spec.t_coord(idx % nt);
            let TileLoc::Tile(tile) = locate_with(&th, &z, t, jp, 0.0)? else { unreachable!() };
            Ok(RectKey { j, cube: cube_index(&z, j, nu), tile })
        })
        .collect()
}

/// Whether the rectangle lies inside the sampled box.
fn fits_box(key: &RectKey, spec: &GridSpec) -> Result<bool> {
    let nu = spec.nu;
    let q = ((2 * nu + 1) as f64).powi(key.j);
    let lo_edge = -spec.z_half - 1e-12;
    let hi_edge = spec.z_half + 1e-12;
    for &c in &key.cube {
        let a = (c as f64 - 0.5) * q;
        let b = (c as f64 + 0.5) * q;
        if a < lo_edge || b > hi_edge {
            return Ok(false);
        }
    }
    let h = ((2 * nu + 1) as f64).powi(2 * key.jp()) / (2 * nu) as f64;
    if spec.t_periodic {
        return Ok(h < 2.0 * spec.t_half);
    }
    // the fiber moves with z; check at the cube corners and centre
    let th = TileHeight::shared(nu);
    let d = 2 * nu;
    for corner in 0..(1usize << d) + 1 {
        let z: Vec<f64> = (0..d)
            .map(|a| {
                let c = key.cube[a] as f64 * q;
                if corner == 1 << d {
                    c
                } else if corner >> a & 1 == 1 {
                    c + 0.4999 * q
                } else {
                    c - 0.5 * q
                }
            })
            .collect();
        let (lo, hi) = key.tile.fiber(&z, &th)?;
        if lo < -spec.t_half - 1e-12 || hi > spec.t_half + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of a maximal rectangle search.
#[derive(Clone, Debug)]
pub struct MaximalRects {
    pub rects: Vec<AdaptedRect>,
    /// Levels searched (rectangles outside this band were not considered).
    pub levels: LevelRange,
}

/// Candidate rectangles of `omega` at every searched level pair.
fn candidates(omega: &GridSet, levels: &LevelRange) -> Result<HashSet<RectKey>> {
    let mut all = HashSet::new();
    for (j, jp) in levels.pairs() {
        let keys = sample_keys(&omega.spec, j, jp)?;
        let mut stats: HashMap<&RectKey, (usize, usize)> = HashMap::new();
        for (idx, k) in keys.iter().enumerate() {
            let e = stats.entry(k).or_insert((0, 0));
            e.0 += 1;
            if omega.mask[idx] {
                e.1 += 1;
            }
        }
        for (k, (tot, inside)) in stats {
            if tot == inside && inside > 0 && fits_box(k, &omega.spec)? {
                all.insert(k.clone());
            }
        }
    }
    Ok(all)
}

fn maximal_of(cands: &HashSet<RectKey>, levels: &LevelRange) -> Vec<RectKey> {
    let mut out: Vec<RectKey> = cands
        .iter()
        .filter(|k| {
            !levels.pairs().into_iter().any(|(j2, jp2)| {
                if j2 < k.j || jp2 < k.jp() || (j2 == k.j && jp2 == k.jp()) {
                    return false;
                }
                cands.contains(&k.ancestor(j2, jp2))
            })
        })
        .cloned()
        .collect();
    out.sort();
    out
}

/// Maximal adapted rectangles whose samples all lie in `omega`.
pub fn maximal_rects(omega: &GridSet, levels: Option<LevelRange>) -> Result<MaximalRects> {
    if omega.count() == 0 {
        return Err(Error::Domain("omega is empty".into()));
    }
    let levels = levels.unwrap_or_else(|| LevelRange::for_grid(&omega.spec));
    let cands = candidates(omega, &levels)?;
    let rects = maximal_of(&cands, &levels).into_iter().map(AdaptedRect::from_key).collect::<Result<Vec<_>>>()?;
    Ok(MaximalRects { rects, levels })
}

/// Which dimension a Journe ratio compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Width,
    Height,
}

/// The widest (or tallest) maximal rectangle of `omega_tilde` containing `r`.
pub fn rect_up(r: &AdaptedRect, omega_tilde: &GridSet, axis: Axis, levels: Option<LevelRange>) -> Result<AdaptedRect> {
    let s = r.sample_set(&omega_tilde.spec);
    if s.mask.iter().zip(&omega_tilde.mask).any(|(a, b)| *a && !*b) {
        return Err(Error::NotContained);
    }
    let m = maximal_rects(omega_tilde, levels)?;
    pick_up(r, &m.rects, axis).ok_or(Error::NotContained)
}

fn pick_up(r: &AdaptedRect, maxes: &[AdaptedRect], axis: Axis) -> Option<AdaptedRect> {
    maxes
        .iter()
        .filter(|s| r.is_subset_of(s))
        .max_by(|a, b| {
            let ka = match axis {
                Axis::Width => (a.width_level, a.height_level),
                Axis::Height => (a.height_level, a.width_level),
            };
            let kb = match axis {
                Axis::Width => (b.width_level, b.height_level),
                Axis::Height => (b.height_level, b.width_level),
            };
            ka.cmp(&kb)
        })
        .cloned()
}

/// Report of a Journe sum.
#[derive(Clone, Debug, Serialize)]
pub struct JourneReport {
    pub sum: f64,
    pub omega_measure: f64,
    pub ratio: f64,
    pub n_rects: usize,
}

/// `sum over M(omega) of (size(R)/size(R up))^delta |R|` with `omega~ = {M_F 1_omega > alpha}`.
pub fn journe_sum(omega: &GridSet, delta: f64, axis: Axis, alpha: f64) -> Result<JourneReport> {
    let levels = LevelRange::for_grid(&omega.spec);
    let scales = crate::operators::ScaleGrid::for_spec(&omega.spec);
    let mut v = journe_sums_with(omega, delta, &[axis], alpha, levels, &scales)?;
    Ok(v.remove(0))
}

/// Journe sums for several axes over a fixed level band and maximal-function
/// scale grid, so that sums on different resolutions count the same rectangles.
pub fn journe_sums_with(
    omega: &GridSet,
    delta: f64,
    axes: &[Axis],
    alpha: f64,
    levels: LevelRange,
    scales: &crate::operators::ScaleGrid,
) -> Result<Vec<JourneReport>> {
    if !(delta > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain("need delta > 0 and alpha in (0, 1)".into()));
    }
    let m = maximal_rects(omega, Some(levels))?;
    let mf = crate::operators::flag_maximal(&omega.indicator(), scales);
    let tilde = GridSet::new(&omega.spec, mf.values.iter().zip(&omega.mask).map(|(v, &o)| o || v.re > alpha).collect())?;
    let mt = maximal_rects(&tilde, Some(levels))?;
    let om = omega.measure();
    axes.iter()
        .map(|&axis| {
            let mut sum = 0.0;
            for r in &m.rects {
                let up = pick_up(r, &mt.rects, axis).ok_or(Error::NotContained)?;
                let ratio = match axis {
                    Axis::Width => r.width() / up.width(),
                    Axis::Height => r.height() / up.height(),
                };
                sum += ratio.powf(delta) * r.measure();
            }
            Ok(JourneReport { sum, omega_measure: om, ratio: sum / om, n_rects: m.rects.len() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tile_height_fixed_point() {
        let th = TileHeight::new(1);
        let f0 = th.bracket(&[0.0, 0.0], 1e-14, 80).unwrap().value();
        assert!((f0 - 0.25).abs() < 1e-13);
        // conjugation symmetry f(x, y) + f(x, -y) = 1/(2 nu)
        let a = th.eval(&[0.3, 0.2], 1e-13).unwrap();
        let b = th.eval(&[0.3, -0.2], 1e-13).unwrap();
        assert!((a + b - 0.5).abs() < 1e-11);
    }

    #[test]
    fn parent_matches_locate() {
        let g = HPoint::new(vec![0.7], vec![-1.3], 2.1).unwrap();
        for j in -2..2 {
            let TileLoc::Tile(t) = tile_locate(&g, j, 0.0).unwrap() else { panic!() };
            let TileLoc::Tile(p) = tile_locate(&g, j + 1, 0.0).unwrap() else { panic!() };
            assert_eq!(t.parent(), p);
        }
    }

    #[test]
    fn tube_measures() {
        let o = HPoint::zero(1);
        assert_eq!(Tube::new(o.clone(), 1.0, 1.0).unwrap().measure(), 16.0);
        assert_eq!(Tube::new(o, 0.5, 0.125).unwrap().measure(), 0.75);
    }
}
