//! Config files, experiment runners and report writers behind the `heisenflag` binary.

use crate::atoms::DecomposeOptions;
use crate::error::{Error, Result};
use crate::experiments::{
    equivalence_row, gaussian_bump, multiplier_summary, proper_subspace, random_band_limited, ratio_summary,
    region_budget, single_particle, witness, EquivalenceScales, MultiplierSummary, RatioSummary, RegionBudget,
    SubspaceReport, FUNCTIONALS,
};
use crate::fields::{lp_norm, GridField, GridSet, GridSpec, C64};
use crate::multiplier::{dyadic_range, flag_spectrum_range, multiplier_pieces_applied, Multiplier2D, PsiPair, QuadSpec};
use crate::operators::{remove_t_mean, ScaleBand, ScaleGrid};
use crate::spectral::SpectralCalculus;
use crate::tiling::tube_contains;
use crate::VERSION;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Box extents and sample counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub z_half: f64,
    pub t_half: f64,
    pub n_z: usize,
    pub n_t: usize,
    #[serde(default = "yes")]
    pub t_periodic: bool,
}

/// One JSON config file. Command line flags override `seed`, `out_dir` and `threads`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "one")]
    pub nu: usize,
    pub grid: GridParams,
    /// Scale band; each experiment has its own default.
    #[serde(default)]
    pub scales: Option<ScaleGrid>,
    #[serde(default)]
    pub seed: u64,
    /// Explicit corpus seeds; otherwise `seed, seed + 1, ...`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Experiment-specific parameters.
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Where eigensolves are cached; none disables caching.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Input field for `field info|norm|convert`.
    #[serde(default)]
    pub input: Option<PathBuf>,
}

/// Flag values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
    }

    pub fn validate(&self) -> Result<()> {
        const KNOWN: [&str; 4] = ["equivalence", "proper_subspace", "multiplier", "field"];
        if !KNOWN.contains(&self.experiment.as_str()) {
            return Err(Error::Config(format!("unknown experiment '{}'", self.experiment)));
        }
        self.spec().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(sc) = &self.scales {
            ScaleGrid::new(sc.r_values.clone(), sc.s_values.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        GridSpec::new(self.nu, g.z_half, g.t_half, g.n_z, g.n_t, g.t_periodic)
    }

    /// Sha256 of the canonical JSON, leaving out fields that do not change results.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            for k in ["out_dir", "threads", "cache_dir"] {
                m.remove(k);
            }
        }
        let text = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Typed view of `params`; unknown keys are rejected.
    pub fn params<P: DeserializeOwned>(&self) -> Result<P> {
        serde_json::from_value(Value::Object(self.params.clone()))
            .map_err(|e| Error::Config(format!("params for {}: {e}", self.experiment)))
    }

    pub fn corpus_seeds(&self, n: usize) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..n as u64).map(|i| self.seed + i).collect(),
        }
    }

    pub fn calculus(&self) -> Result<SpectralCalculus> {
        SpectralCalculus::build_cached(&self.spec()?, self.cache_dir.as_deref())
    }
}

/// Provenance embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub version: String,
    pub config_hash: String,
    pub experiment: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub scale_band: Option<ScaleBand>,
}

impl ReportMeta {
    pub fn new(cfg: &ExperimentConfig, band: Option<ScaleBand>) -> Result<Self> {
        Ok(Self {
            version: VERSION.into(),
            config_hash: cfg.hash(),
            experiment: cfg.experiment.clone(),
            seed: cfg.seed,
            grid: cfg.spec()?,
            scale_band: band,
        })
    }

    /// `# key value` lines for CSV files.
    pub fn csv_header(&self) -> String {
        let g = &self.grid;
        let mut s = String::new();
        let _ = writeln!(s, "# heisenflag {}", self.version);
        let _ = writeln!(s, "# experiment {}", self.experiment);
        let _ = writeln!(s, "# config_hash {}", self.config_hash);
        let _ = writeln!(s, "# seed {}", self.seed);
        let _ = writeln!(
            s,
            "# grid nu={} Z={} T={} n_z={} n_t={} t_periodic={}",
            g.nu, g.z_half, g.t_half, g.n_z, g.n_t, g.t_periodic
        );
        if let Some(b) = &self.scale_band {
            let _ = writeln!(s, "# scale_band r=[{}, {}] s=[{}, {}]", b.r_min, b.r_max, b.s_min, b.s_max);
        }
        s
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    Ok(p)
}

fn band_union(a: ScaleBand, b: ScaleBand) -> ScaleBand {
    ScaleBand {
        r_min: a.r_min.min(b.r_min),
        r_max: a.r_max.max(b.r_max),
        s_min: a.s_min.min(b.s_min),
        s_max: a.s_max.max(b.s_max),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivalenceParams {
    pub n_random: usize,
    pub include_zero: bool,
    pub include_particle: bool,
    /// Levels `(j, j')` of the single particle.
    pub particle_levels: (i32, i32),
}

impl Default for EquivalenceParams {
    fn default() -> Self {
        Self { n_random: 10, include_zero: true, include_particle: true, particle_levels: (0, 0) }
    }
}

/// Functionals of each corpus item and the pairwise ratio summary.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EquivalenceReport {
    pub meta: ReportMeta,
    pub items: Vec<String>,
    pub rows: Vec<[f64; 8]>,
    pub ratios: Vec<RatioSummary>,
}

impl EquivalenceReport {
    pub fn rows_csv(&self) -> String {
        let mut s = self.meta.csv_header();
        let _ = writeln!(s, "item,{}", FUNCTIONALS.join(","));
        for (name, row) in self.items.iter().zip(&self.rows) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{name},{}", cells.join(","));
        }
        s
    }

    pub fn ratios_csv(&self) -> String {
        let mut s = self.meta.csv_header();
        let _ = writeln!(s, "num,den,min,median,max,count");
        for r in &self.ratios {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.num, r.den, r.min, r.median, r.max, r.count);
        }
        s
    }
}

/// The eight functionals over the zero function, one particle and a random corpus.
pub fn run_equivalence(cfg: &ExperimentConfig, calc: &SpectralCalculus) -> Result<EquivalenceReport> {
    let p: EquivalenceParams = cfg.params()?;
    let spec = &calc.spec;
    let mut sc = EquivalenceScales::for_calc(calc);
    if let Some(g) = &cfg.scales {
        sc.maximal = g.clone();
    }
    let mut items: Vec<(String, GridField)> = Vec::new();
    if p.include_zero {
        items.push(("zero".into(), GridField::zeros(spec)));
    }
    if p.include_particle {
        let o = DecomposeOptions::for_nu(spec.nu);
        let (j, jp) = p.particle_levels;
        items.push((format!("particle_{j}_{jp}"), single_particle(spec, j, jp, o.m, o.n, o.kappa)?.a));
    }
    for s in cfg.corpus_seeds(p.n_random) {
        items.push((format!("random_{s}"), random_band_limited(spec, s)));
    }
    let rows = items.par_iter().map(|(_, f)| equivalence_row(f, calc, &sc)).collect::<Result<Vec<_>>>()?;
    let ratios = ratio_summary(&rows);
    Ok(EquivalenceReport {
        meta: ReportMeta::new(cfg, Some(band_union(sc.square.band(), sc.maximal.band())))?,
        items: items.into_iter().map(|(n, _)| n).collect(),
        rows,
        ratios,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubspaceParams {
    pub h_values: Vec<f64>,
}

impl Default for SubspaceParams {
    fn default() -> Self {
        Self { h_values: vec![4.0, 8.0, 16.0, 32.0] }
    }
}

/// `r` from `dz` to the power of two at or above `Z`, `s` from `dt` to `T/2`, two per octave.
pub fn subspace_default_scales(spec: &GridSpec) -> Result<ScaleGrid> {
    let r_hi = 2f64.powf(spec.z_half.log2().ceil()).max(spec.dz());
    let s_hi = (spec.t_half / 2.0).max(spec.dt());
    ScaleGrid::log_grid(spec.dz(), r_hi, spec.dt(), s_hi, 2)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubspaceOutput {
    pub meta: ReportMeta,
    pub report: SubspaceReport,
}

impl SubspaceOutput {
    pub fn rows_csv(&self) -> String {
        let mut s = self.meta.csv_header();
        let _ = writeln!(s, "h,witness,control,one_param");
        for r in &self.report.rows {
            let _ = writeln!(s, "{},{},{},{}", r.h, r.witness, r.control, r.one_param);
        }
        s
    }

    pub fn fit_csv(&self) -> String {
        let mut s = self.meta.csv_header();
        let _ = writeln!(s, "series,slope,intercept,r2,rel_slope");
        let r = &self.report;
        for (name, f) in [("witness", &r.witness_fit), ("control", &r.control_fit), ("one_param", &r.one_param_fit)] {
            let _ = writeln!(s, "{name},{},{},{},{}", f.slope, f.intercept, f.r2, f.rel_slope);
        }
        s
    }
}

pub fn run_proper_subspace(cfg: &ExperimentConfig, calc: &SpectralCalculus) -> Result<SubspaceOutput> {
    let p: SubspaceParams = cfg.params()?;
    let scales = match &cfg.scales {
        Some(g) => g.clone(),
        None => subspace_default_scales(&calc.spec)?,
    };
    let report = proper_subspace(calc, &p.h_values, &scales)?;
    Ok(SubspaceOutput { meta: ReportMeta::new(cfg, Some(scales.band()))?, report })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetParams {
    pub multiplier: String,
    pub particle_levels: (i32, i32),
    /// Cancellation order `M`; defaults to the decomposition's.
    pub m: Option<usize>,
    pub n: usize,
    pub kappa: f64,
}

impl Default for BudgetParams {
    fn default() -> Self {
        Self { multiplier: "rational".into(), particle_levels: (0, 0), m: None, n: 1, kappa: 3.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiplierParams {
    pub multipliers: Vec<String>,
    pub js: Vec<i32>,
    pub ells: Vec<i32>,
    pub eps: f64,
    pub quad_half_width: f64,
    pub quad_n: usize,
    pub budget: Option<BudgetParams>,
    pub identity_check: bool,
}

impl Default for MultiplierParams {
    fn default() -> Self {
        Self {
            multipliers: vec!["constant".into(), "rational".into(), "imaginary_power".into()],
            js: (2..=6).collect(),
            ells: (-3..=1).collect(),
            eps: 0.25,
            quad_half_width: 4.0,
            quad_n: 256,
            budget: Some(BudgetParams::default()),
            identity_check: true,
        }
    }
}

/// How well the pieces of `m = 1` over the whole spectrum rebuild a mean-zero field.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdentityCheck {
    pub js: (i32, i32),
    pub ells: (i32, i32),
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MultiplierReport {
    pub meta: ReportMeta,
    pub summaries: Vec<MultiplierSummary>,
    pub identity: Option<IdentityCheck>,
    pub budget: Option<RegionBudget>,
}

pub fn identity_check(calc: &SpectralCalculus, seed: u64) -> Result<IdentityCheck> {
    let ((x_lo, x_hi), (l_lo, l_hi)) = flag_spectrum_range(calc);
    let js = dyadic_range(x_lo, x_hi);
    let ells = dyadic_range(l_lo, l_hi);
    let f = remove_t_mean(&random_band_limited(&calc.spec, seed));
    let pieces = multiplier_pieces_applied(calc, &Multiplier2D::constant(1.0), &f, &js, &ells, &PsiPair::eta())?;
    let mut sum = GridField::zeros(&calc.spec);
    for (_, g) in &pieces {
        sum.axpy(C64::new(1.0, 0.0), g);
    }
    let rel_error = sum.sub(&f)?.l2() / f.l2();
    Ok(IdentityCheck { js: (js[0], js[js.len() - 1]), ells: (ells[0], ells[ells.len() - 1]), rel_error })
}

pub fn run_multiplier(cfg: &ExperimentConfig, calc: &SpectralCalculus) -> Result<MultiplierReport> {
    let p: MultiplierParams = cfg.params()?;
    if p.js.is_empty() || p.ells.is_empty() {
        return Err(Error::Config("js and ells must be nonempty".into()));
    }
    let ms = p.multipliers.iter().map(|n| Multiplier2D::by_name(n)).collect::<Result<Vec<_>>>()?;
    let quad = QuadSpec { half_width: p.quad_half_width, n: p.quad_n };
    let summaries = ms
        .iter()
        .map(|m| multiplier_summary(calc, m, &p.js, &p.ells, p.eps, quad))
        .collect::<Result<Vec<_>>>()?;
    let identity = if p.identity_check { Some(identity_check(calc, cfg.seed)?) } else { None };
    let budget = match &p.budget {
        None => None,
        Some(b) => {
            let o = DecomposeOptions::for_nu(calc.spec.nu);
            let (j, jp) = b.particle_levels;
            let part = single_particle(&calc.spec, j, jp, b.m.unwrap_or(o.m), b.n, b.kappa)?;
            let m = Multiplier2D::by_name(&b.multiplier)?;
            Some(region_budget(calc, &m, &part, &part.rect, &p.js, &p.ells, &PsiPair::eta())?)
        }
    };
    // pieces live at x ~ 2^j and |lambda| ~ 2^l; the band records 2^{-j} and 2^{-l}
    let ext = |v: &[i32]| (2f64.powi(-v.iter().max().copied().unwrap_or(0)), 2f64.powi(-v.iter().min().copied().unwrap_or(0)));
    let ((r_min, r_max), (s_min, s_max)) = (ext(&p.js), ext(&p.ells));
    let band = ScaleBand { r_min, r_max, s_min, s_max };
    Ok(MultiplierReport { meta: ReportMeta::new(cfg, Some(band))?, summaries, identity, budget })
}

impl MultiplierReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Named test fields for `field gen`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Zero,
    Gaussian,
    Particle,
    Witness,
    Random,
    Indicator,
}

impl std::str::FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into())).map_err(|_| Error::Config(format!("unknown field kind '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldParams {
    pub kind: FieldKind,
    /// Gaussian widths in `z` and `t`.
    pub wz: f64,
    pub wt: f64,
    pub particle_levels: (i32, i32),
    pub mean_zero: bool,
    /// Tube `T(o, radius, half_height)` for `indicator`.
    pub radius: f64,
    pub half_height: f64,
    /// Output file name inside `out_dir`; defaults to `<kind>.hfld`.
    pub name: Option<String>,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            kind: FieldKind::Gaussian,
            wz: 1.0,
            wt: 1.0,
            particle_levels: (0, 0),
            mean_zero: true,
            radius: 1.0,
            half_height: 1.0,
            name: None,
        }
    }
}

pub fn generate_field(spec: &GridSpec, p: &FieldParams, seed: u64) -> Result<GridField> {
    Ok(match p.kind {
        FieldKind::Zero => GridField::zeros(spec),
        FieldKind::Gaussian => gaussian_bump(spec, p.wz, p.wt),
        FieldKind::Particle => {
            let o = DecomposeOptions::for_nu(spec.nu);
            single_particle(spec, p.particle_levels.0, p.particle_levels.1, o.m, o.n, o.kappa)?.a
        }
        FieldKind::Witness => witness(spec, p.mean_zero),
        FieldKind::Random => random_band_limited(spec, seed),
        FieldKind::Indicator => {
            if !(p.radius > 0.0 && p.half_height > 0.0) {
                return Err(Error::Config("indicator needs positive radius and half_height".into()));
            }
            let o = vec![0.0; spec.zdim()];
            GridSet::from_fn(spec, |z, t| tube_contains(&o, 0.0, p.radius, p.half_height, z, t)).indicator()
        }
    })
}

/// Writes the generated field and returns its path.
pub fn run_field_gen(cfg: &ExperimentConfig, kind: Option<FieldKind>) -> Result<PathBuf> {
    let mut p: FieldParams = cfg.params()?;
    if let Some(k) = kind {
        p.kind = k;
    }
    let f = generate_field(&cfg.spec()?, &p, cfg.seed)?;
    let name = p.name.clone().unwrap_or_else(|| format!("{}.hfld", serde_json::to_value(p.kind).unwrap().as_str().unwrap()));
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(name);
    f.write_hfld(&path)?;
    Ok(path)
}

/// Header and basic statistics of a field file.
pub fn field_info(f: &GridField) -> Value {
    json!({
        "version": VERSION,
        "grid": f.spec,
        "grid_hash": f.spec.hash(),
        "samples": f.spec.len(),
        "real": f.is_real(),
        "l2": f.l2(),
        "max_abs": f.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        "integral": [f.integral().re, f.integral().im],
    })
}

pub fn field_norms(f: &GridField, p: Option<f64>) -> Result<Value> {
    let mut m = Map::new();
    m.insert("l1".into(), json!(lp_norm(f, 1.0)));
    m.insert("l2".into(), json!(lp_norm(f, 2.0)));
    m.insert("linf".into(), json!(f.values.iter().map(|v| v.norm()).fold(0.0, f64::max)));
    if let Some(p) = p {
        if !(p >= 1.0) {
            return Err(Error::Config(format!("norm exponent must be at least 1, got {p}")));
        }
        m.insert(format!("l{p}"), json!(lp_norm(f, p)));
    }
    Ok(Value::Object(m))
}

/// The slice of `f` at the sample time nearest `t`, one row per `z` sample.
pub fn field_slice_csv(f: &GridField, t: f64) -> Result<String> {
    let spec = &f.spec;
    if t.abs() > spec.t_half {
        return Err(Error::Config(format!("t = {t} lies outside [-{0}, {0}]", spec.t_half)));
    }
    let k = (((t + spec.t_half) / spec.dt()).round() as usize).min(spec.n_t - 1);
    let mut s = String::new();
    let names: Vec<String> = (0..spec.zdim()).map(|a| format!("z{}", a + 1)).collect();
    let _ = writeln!(s, "# t {}", spec.t_coord(k));
    let _ = writeln!(s, "{},re,im", names.join(","));
    for zi in 0..spec.n_zpts() {
        let z: Vec<String> = spec.z_coords(zi).iter().map(|v| v.to_string()).collect();
        let v = f.values[zi * spec.n_t + k];
        let _ = writeln!(s, "{},{},{}", z.join(","), v.re, v.im);
    }
    Ok(s)
}

/// Runs a batch experiment and writes its reports into `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let calc = cfg.calculus()?;
    let dir = &cfg.out_dir;
    match cfg.experiment.as_str() {
        "equivalence" => {
            let r = run_equivalence(cfg, &calc)?;
            Ok(vec![
                write_out(dir, "equivalence.csv", &r.rows_csv())?,
                write_out(dir, "equivalence_ratios.csv", &r.ratios_csv())?,
            ])
        }
        "proper_subspace" => {
            let r = run_proper_subspace(cfg, &calc)?;
            Ok(vec![
                write_out(dir, "proper_subspace.csv", &r.rows_csv())?,
                write_out(dir, "proper_subspace_fit.csv", &r.fit_csv())?,
            ])
        }
        "multiplier" => {
            let r = run_multiplier(cfg, &calc)?;
            Ok(vec![write_out(dir, "multiplier.json", &r.to_json())?])
        }
        other => Err(Error::Config(format!("'{other}' is not a batch experiment"))),
    }
}

/// Exit code for an error: 2 for config and input problems, 3 for numerical ones.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) | Error::Io(_) | Error::Json(_) | Error::SpecMismatch(_) => 2,
        _ => 3,
    }
}

/// JSON diagnostic printed on stderr for numerical failures.
pub fn diagnostic(e: &Error) -> Value {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::NoConvergence { .. } => "no_convergence",
        Error::Numerical(_) => "numerical",
        Error::Cancellation { .. } => "cancellation",
        Error::Decay { .. } => "decay",
        Error::Support { .. } => "support",
        Error::NotContained => "not_contained",
        Error::SizeLimit(_) => "size_limit",
        _ => "config",
    };
    let mut v = json!({ "error": kind, "message": e.to_string(), "version": VERSION });
    match e {
        Error::Support { count, first } => v["samples"] = json!({ "count": count, "first": first }),
        Error::NoConvergence { lo, hi } => v["bracket"] = json!([lo, hi]),
        _ => {}
    }
    v
}

