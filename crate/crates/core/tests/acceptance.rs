//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p heisenflag --test acceptance`.
//!
//! Every criterion prints PASS or FAIL with its measured values and runtime.
//! The binary exits 0 either way so that the rest of the workspace suite still
//! runs; the tally at the end is the verdict.

use heisenflag::atoms::{atomic_decompose, DecomposeOptions};
use heisenflag::experiments::{multiplier_summary, proper_subspace, random_band_limited, region_budget, single_particle};
use heisenflag::fields::{conv1_fft, GridField, GridSet, GridSpec, C64};
use heisenflag::group::{distance, symplectic_packed, GroupContext, HPoint, Metric};
use heisenflag::kernels::{
    bulk_mask, gaussian_log_ratio, heat_kernel, poisson_kernel_with, poisson_ratio_band,
};
use heisenflag::multiplier::{Multiplier2D, PsiPair, QuadSpec};
use heisenflag::operators::{
    area_fn, flag_maximal, grand_maximal, iterated_maximal, khinchin_square_check, nontangential_maximal,
    radial_maximal, remove_t_mean, reproduce, square_cts, square_dis, ConeSpec, DecayBounds, FilterPair,
    GrandMember, ScaleGrid,
};
use heisenflag::cli::subspace_default_scales;
use heisenflag::spectral::{fan_clusters, SpectralCalculus};
use heisenflag::tiling::{journe_sums_with, tile_locate, tube_contains, Axis, LevelRange, TileHeight, TileLoc, Tube};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::time::{Duration, Instant};

// Single particle at levels (0, 0), kappa 3, on the 16/64 grid: measured 119.387.
const PARTICLE_LAMBDA_SUM: f64 = 119.39;
// Signs are products r_m s_n of two independent families; the sharp L1 Khinchin
// constant 1/sqrt(2) applied once per family gives ||S f||_1 <= 2 E||sum||_1.
const KHINCHIN_C: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(parts: &[(bool, String)]) -> Outcome {
    Outcome {
        pass: parts.iter().all(|p| p.0),
        detail: parts.iter().map(|(ok, s)| format!("{}{s}", if *ok { "" } else { "!" })).collect::<Vec<_>>().join("; "),
    }
}

fn budget(t: Duration, secs: f64) -> (bool, String) {
    (t.as_secs_f64() < secs, format!("runtime {:.1}s (< {secs}s)", t.as_secs_f64()))
}

fn grid(z: f64, t: f64, nz: usize, nt: usize) -> GridSpec {
    GridSpec::new(1, z, t, nz, nt, true).expect("valid grid")
}

fn rand_point(rng: &mut ChaCha20Rng, nu: usize, zr: f64, tr: f64) -> HPoint {
    let x = (0..nu).map(|_| rng.random_range(-zr..zr)).collect();
    let y = (0..nu).map(|_| rng.random_range(-zr..zr)).collect();
    HPoint::new(x, y, rng.random_range(-tr..tr)).expect("valid point")
}

fn pdiff(a: &HPoint, b: &HPoint) -> f64 {
    let scale = 1.0f64.max(a.gauge_norm().powi(2)).max(b.gauge_norm().powi(2));
    let mut d = (a.t - b.t).abs() / scale;
    let zs = scale.sqrt();
    for (p, q) in a.x.iter().chain(&a.y).zip(b.x.iter().chain(&b.y)) {
        d = d.max((p - q).abs() / zs);
    }
    d
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let n = 100_000;
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (mut assoc, mut inv, mut dil) = (0.0f64, 0.0f64, 0.0f64);
    let mut cmp_viol = 0usize;
    let mut worst = 0.0f64;
    let ctx = GroupContext::new(1).unwrap();
    let c_stated = ctx.stated_comparison_constant();
    for _ in 0..n {
        let a = rand_point(&mut rng, 1, 3.0, 9.0);
        let b = rand_point(&mut rng, 1, 3.0, 9.0);
        let c = rand_point(&mut rng, 1, 3.0, 9.0);
        let r = rng.random_range(0.1..10.0);
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let rr = a.mul(&b.mul(&c).unwrap()).unwrap();
        assoc = assoc.max(pdiff(&l, &rr));
        for m in [Metric::Gauge, Metric::Koranyi] {
            let d0 = distance(&a, &b, m).unwrap();
            let d1 = distance(&c.mul(&a).unwrap(), &c.mul(&b).unwrap(), m).unwrap();
            inv = inv.max(rel(d0, d1));
        }
        let lhs = a.dilate(r).unwrap().mul(&b.dilate(r).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().dilate(r).unwrap();
        dil = dil.max(pdiff(&lhs, &rhs));
        let (d, dk) = (distance(&a, &b, Metric::Gauge).unwrap(), distance(&a, &b, Metric::Koranyi).unwrap());
        if d > dk * (1.0 + 1e-12) || dk > c_stated * d * (1.0 + 1e-12) {
            cmp_viol += 1;
        }
        if d > 0.0 {
            worst = worst.max(dk / d);
        }
    }
    // |delta_r E| / |E| for an axis-aligned box, counted on one grid
    let spec = grid(4.0, 16.0, 64, 256);
    let (a, h) = (1.0, 1.5);
    let count = |r: f64| {
        GridSet::from_fn(&spec, |z, t| z.iter().all(|v| v.abs() < r * a) && t.abs() < r * r * h).measure()
    };
    let e = count(1.0);
    let mut scale_ok = true;
    let mut scale_msg = Vec::new();
    for r in [1.5, 2.0] {
        let q = count(r) / e;
        let want = r.powi(4);
        let tol = 2.0 * (2.0 * spec.dz() / (2.0 * a) + spec.dt() / (2.0 * h));
        scale_ok &= rel(q, want) <= tol;
        scale_msg.push(format!("r={r}: {q:.4} vs {want} (tol {tol:.3})"));
    }
    let t = t0.elapsed();
    check(&[
        (assoc <= 1e-12, format!("assoc {assoc:.1e}")),
        (inv <= 1e-12, format!("left-inv {inv:.1e}")),
        (dil <= 1e-12, format!("dilation {dil:.1e}")),
        (
            cmp_viol == 0,
            format!(
                "d <= d_K <= {c_stated:.4} d violated at {cmp_viol}/{n} points (max d_K/d {worst:.4}, sharp {:.4})",
                ctx.sharp_comparison_constant()
            ),
        ),
        (scale_ok, format!("measure scaling {}", scale_msg.join(", "))),
        budget(t, 10.0),
    ])
}

fn random_set(spec: &GridSpec, seed: u64) -> GridSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let tubes: Vec<(Vec<f64>, f64, f64, f64)> = (0..3)
        .map(|_| {
            let c = vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            (c, rng.random_range(-5.0..5.0), rng.random_range(0.5..1.5), rng.random_range(0.5..3.0))
        })
        .collect();
    GridSet::from_fn(spec, |z, t| tubes.iter().any(|(c, ct, r, s)| tube_contains(c, *ct, *r, *s, z, t)))
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let th = TileHeight::new(1);
    let n = 10_000;
    let (mut boundary, mut total, mut bad_fiber, mut bad_nest) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..n {
        let g = rand_point(&mut rng, 1, 3.0, 10.0);
        let mut prev: Option<heisenflag::tiling::TileId> = None;
        for j in -2..=2 {
            total += 1;
            match tile_locate(&g, j, 1e-9).unwrap() {
                TileLoc::Boundary => {
                    boundary += 1;
                    prev = None;
                }
                TileLoc::Tile(id) => {
                    let (lo, hi) = id.fiber(&g.packed_z(), &th).unwrap();
                    if !(lo <= g.t && g.t < hi) {
                        bad_fiber += 1;
                    }
                    if let Some(p) = &prev {
                        if p.parent() != id {
                            bad_nest += 1;
                        }
                    }
                    prev = Some(id);
                }
            }
        }
    }
    let rate = boundary as f64 / total as f64;
    let f0 = th.bracket(&[0.0, 0.0], 1e-15, 200).unwrap().value();
    // tube measure against Monte Carlo, off-centre so the shear matters
    let mut mc_worst = 0.0f64;
    for &(r, s) in &[(1.0, 1.0), (0.5, 0.125), (2.0, 0.5), (0.7, 3.0)] {
        let c = HPoint::new(vec![1.0], vec![-0.5], 2.0).unwrap();
        let tube = Tube::new(c.clone(), r, s).unwrap();
        let cz = c.packed_z();
        // the t-section over z is an interval sheared linearly in z: bound it at the corners
        let (mut tlo, mut thi) = (f64::INFINITY, f64::NEG_INFINITY);
        for sx in [-r, r] {
            for sy in [-r, r] {
                let sh = symplectic_packed(&cz, &[cz[0] + sx, cz[1] + sy]);
                tlo = tlo.min(c.t + sh - r * r - s);
                thi = thi.max(c.t + sh + r * r + s);
            }
        }
        let m = 400_000;
        let mut hit = 0usize;
        for _ in 0..m {
            let z = [cz[0] + rng.random_range(-r..r), cz[1] + rng.random_range(-r..r)];
            let t = rng.random_range(tlo..thi);
            if tube_contains(&cz, c.t, r, s, &z, t) {
                hit += 1;
            }
        }
        let est = hit as f64 / m as f64 * (2.0 * r).powi(2) * (thi - tlo);
        mc_worst = mc_worst.max(rel(est, tube.measure()));
    }
    let small = Tube::new(HPoint::zero(1), 0.5, 0.125).unwrap().measure();
    // Journe sums at two resolutions over the band the coarse grid resolves
    let coarse = grid(4.0, 16.0, 16, 64);
    let levels = LevelRange::for_grid(&coarse);
    let jscales = ScaleGrid::for_spec(&coarse);
    let mut cdelta = Vec::new();
    for (nz, nt) in [(16usize, 64usize), (24, 144)] {
        let spec = grid(4.0, 16.0, nz, nt);
        let mut worst = [0.0f64; 2];
        for seed in 0..20 {
            let om = random_set(&spec, seed);
            let reps = journe_sums_with(&om, 1.0, &[Axis::Width, Axis::Height], 0.5, levels, &jscales).unwrap();
            for (w, rep) in worst.iter_mut().zip(&reps) {
                *w = w.max(rep.ratio);
            }
        }
        cdelta.push(worst);
    }
    let stable = (0..2).all(|k| rel(cdelta[0][k], cdelta[1][k]) <= 0.2);
    let t = t0.elapsed();
    check(&[
        (rate < 0.01 && bad_fiber == 0 && bad_nest == 0, format!(
            "tiles j=-2..2: boundary rate {:.4}%, fiber misses {bad_fiber}, nesting misses {bad_nest}",
            100.0 * rate
        )),
        (f0 == 0.5, format!("f(0) = {f0} (expected 1/2)")),
        (mc_worst <= 0.02, format!("tube measure vs MC worst {:.2}%", 100.0 * mc_worst)),
        (small == 0.75, format!("|T(o,1/2,1/8)| = {small}")),
        (stable, format!(
            "Journe c_1 width {:.3} -> {:.3}, height {:.3} -> {:.3} (16/64 -> 24/144)",
            cdelta[0][0], cdelta[1][0], cdelta[0][1], cdelta[1][1]
        )),
        budget(t, 120.0),
    ])
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let spec = grid(4.0, 16.0, 16, 64);
    let calc = SpectralCalculus::build(&spec).unwrap();
    let rs = [0.1, 0.25, 0.5, 1.0];
    let mut drift = Vec::new();
    let mut oracle = 0.0f64;
    for &r in &rs {
        let h = heat_kernel(r, &spec).unwrap();
        drift.push((h.integral().re - 1.0).abs());
        let hs = calc.heat(&GridField::delta(&spec), r).unwrap();
        oracle = oracle.max(h.sub(&hs).unwrap().l2() / hs.l2());
    }
    let a = heat_kernel(0.25, &spec).unwrap();
    let b = heat_kernel(0.5, &spec).unwrap();
    let c = heat_kernel(0.75, &spec).unwrap();
    let semi = conv1_fft(&a, &b).unwrap().sub(&c).unwrap().l2() / c.l2();
    let mut band_ok = true;
    let mut bands = Vec::new();
    for r in [0.25, 0.5, 1.0] {
        let (l1, h1) = poisson_ratio_band(&poisson_kernel_with(&calc, r, 64).unwrap(), r);
        let (l2, h2) = poisson_ratio_band(&poisson_kernel_with(&calc, r, 128).unwrap(), r);
        band_ok &= rel(l1, l2) <= 0.1 && rel(h1, h2) <= 0.1 && l1 > 0.0;
        bands.push(format!("r={r} [{l2:.4}, {h2:.4}]"));
    }
    let mut glr = f64::NEG_INFINITY;
    for r in [0.25, 0.5, 1.0] {
        let h = heat_kernel(r, &spec).unwrap();
        for d in [0.0, 0.5, 1.0] {
            glr = glr.max(gaussian_log_ratio(&h, r, d));
        }
    }
    let t = t0.elapsed();
    let drift_msg: Vec<String> = rs.iter().zip(&drift).map(|(r, d)| format!("r={r}: {d:.1e}")).collect();
    check(&[
        (drift.iter().all(|d| *d < 1e-6), format!("heat mass drift {}", drift_msg.join(", "))),
        (semi < 1e-3, format!("semigroup {semi:.2e}")),
        (oracle < 1e-3, format!("heat vs spectral {oracle:.2e}")),
        (band_ok, format!("Poisson band 64->128 nodes stable: {}", bands.join(", "))),
        (glr.is_finite(), format!("Gaussian log-ratio max {glr:.3}")),
        budget(t, 180.0),
    ])
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let spec = grid(4.0, 32.0, 16, 128);
    let calc = SpectralCalculus::build(&spec).unwrap();
    let build = t0.elapsed();
    let f = GridField::from_fn(&spec, |z, t| {
        C64::new((-(z[0] * z[0] + 0.5 * z[1] * z[1]) - 0.02 * t * t).exp() * (1.0 + z[0]), 0.3 * (0.2 * t).sin() * (-z[1] * z[1]).exp())
    });
    let c = calc.forward(&f).unwrap();
    let e: f64 = calc.mode_energies(&c).iter().sum();
    let parseval = rel(e, f.l2().powi(2));
    let m1 = |mu: f64, _l: f64| 1.0 / (1.0 + mu);
    let m2 = |mu: f64, l: f64| (-l.abs()).exp() * mu;
    let two = calc.apply_real(&calc.apply_real(&f, m1).unwrap(), m2).unwrap();
    let one = calc.apply_real(&f, |mu, l| m1(mu, l) * m2(mu, l)).unwrap();
    let comp = two.sub(&one).unwrap().l2() / one.l2();
    // fan on the 64-mode grid, judged where the magnetic length l = (8 nu |lambda|)^{-1/2}
    // spans 1.5 steps and the d = 2 orbit fits in half the box
    let fspec = grid(4.0, 32.0, 16, 64);
    let fcalc = SpectralCalculus::build(&fspec).unwrap();
    let mut fan = Vec::new();
    let mut judged = 0;
    let mut fan_ok = true;
    for bin in 1..=fspec.n_t / 2 {
        let lam = fcalc.modes[bin].lambda.abs();
        let ell = 1.0 / (8.0 * lam).sqrt();
        let resolved = ell >= 1.5 * fspec.dz() && 5f64.sqrt() * ell <= fspec.z_half / 2.0;
        let cl = fan_clusters(&fcalc, bin, 0.05);
        if cl.len() < 3 {
            fan_ok &= !resolved;
            continue;
        }
        let q = (cl[2].energy - cl[1].energy) / (cl[1].energy - cl[0].energy);
        if resolved {
            judged += 1;
            fan_ok &= (q - 1.0).abs() <= 0.1;
        }
        if bin <= 6 || resolved {
            fan.push(format!("{}bin {bin}: {q:.3}", if resolved { "*" } else { "" }));
        }
    }
    let g = remove_t_mean(&f);
    let pair = FilterPair::partition();
    let sc = ScaleGrid::covering(&calc);
    let plan = rel(square_dis(&g, &calc, &pair, &sc).unwrap().l2(), g.l2());
    let rep = reproduce(&g, &calc, &pair, &sc).unwrap().sub(&g).unwrap().l2() / g.l2();
    let t = t0.elapsed();
    check(&[
        (parseval <= 1e-10, format!("Parseval {parseval:.1e}")),
        (comp <= 1e-10, format!("composition {comp:.1e}")),
        (fan_ok && judged > 0, format!("fan spacing ratios (* judged) {}", fan.join(", "))),
        (plan <= 1e-10, format!("Plancherel {plan:.1e}")),
        (rep < 1e-8, format!("reproducing {rep:.1e}")),
        budget(t, 300.0),
        (true, format!("build {:.1}s", build.as_secs_f64())),
    ])
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let spec = grid(4.0, 16.0, 16, 64);
    let scales = ScaleGrid::for_spec(&spec);
    let d = GridField::delta(&spec);
    let mf = flag_maximal(&d, &scales).re();
    let mi = iterated_maximal(&d, &scales).re();
    let bulk = bulk_mask(&spec);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..spec.len() {
        if bulk[i] && mi[i] > 0.0 {
            lo = lo.min(mf[i] / mi[i]);
            hi = hi.max(mf[i] / mi[i]);
        }
    }
    // continuum sandwich over the same scales, x = s / r^2
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for (r, s) in scales.pairs() {
        let x = s / (r * r);
        a = a.max((1.0 + x) / x.max(1.0));
        b = b.max(4.0 * x / ((1.0 + x) * x.min(2.0)));
    }
    let width = (hi / lo).ln() / (a * b).ln();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let f = random_band_limited(&spec, 5);
    let sc = ScaleGrid::for_spec(&spec);
    let rad = radial_maximal(&f, &calc, &sc).unwrap().re();
    let nt = nontangential_maximal(&f, &calc, ConeSpec::default(), &sc).unwrap().re();
    let fam = [GrandMember::new(FilterPair::flag_poisson(), 1.0), GrandMember::new(FilterPair::gaussian(), 1.0)];
    let gm = grand_maximal(&f, &calc, &fam, &sc, &DecayBounds::default()).unwrap().re();
    let viol = (0..spec.len()).filter(|&i| rad[i] > nt[i] || nt[i] > gm[i]).count();
    let cts = FilterPair::partition_cts();
    let sq = ScaleGrid::covering(&calc);
    let x = area_fn(&f, &calc, &cts, 0.0, 0.0, &sq).unwrap();
    let y = square_cts(&f, &calc, &cts, &sq).unwrap();
    let bitwise = x.values.iter().zip(&y.values).all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits());
    let t = t0.elapsed();
    check(&[
        ((width - 1.0).abs() <= 0.3, format!(
            "M_F/M_it band [{lo:.4}, {hi:.4}], log-width {:.3} vs sandwich [{:.4}, {a:.4}] log-width {:.3}: ratio {width:.3}",
            (hi / lo).ln(),
            1.0 / b,
            (a * b).ln()
        )),
        (viol == 0, format!("radial <= nontangential <= grand violations {viol}")),
        (bitwise, "area(0,0) == square_cts bitwise".to_string()),
        (true, format!("runtime {:.1}s", t.as_secs_f64())),
    ])
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let pair = FilterPair::partition();
    let mut parts = Vec::new();
    // single particle on the 16/64 grid; C recorded from the first run
    let spec = grid(4.0, 16.0, 16, 64);
    let calc = SpectralCalculus::build(&spec).unwrap();
    let sc = ScaleGrid::covering(&calc);
    let o = DecomposeOptions::for_nu(1);
    let p = single_particle(&spec, 0, 0, o.m, o.n, o.kappa).unwrap();
    let d = atomic_decompose(&p.a, &calc, &pair, &sc, &o).unwrap();
    let res = d.residual.l2() / p.a.l2();
    let ls = d.lambda_sum();
    parts.push((res < 1e-6, format!("particle residual {res:.1e}")));
    parts.push((ls <= PARTICLE_LAMBDA_SUM, format!("particle sum|lambda| {ls:.2} (C = {PARTICLE_LAMBDA_SUM})")));
    let mut worst = 0.0f64;
    for li in 0..d.levels.len() {
        let rep = d.level_sign_check(&calc, li, 16, 7).unwrap();
        worst = worst.max(rep.max_ratio);
    }
    parts.push((worst <= 1.05, format!("A2 sign check max ratio {worst:.3} over {} levels", d.levels.len())));
    // corpus ratio on two resolutions
    let mut maxes = Vec::new();
    for (nz, nt) in [(12usize, 36usize), (16, 64)] {
        let spec = grid(4.0, 16.0, nz, nt);
        let calc = SpectralCalculus::build(&spec).unwrap();
        let sc = ScaleGrid::covering(&calc);
        let mut m = 0.0f64;
        for seed in 0..10 {
            let f = random_band_limited(&spec, seed);
            let d = atomic_decompose(&f, &calc, &pair, &sc, &o).unwrap();
            m = m.max(d.lambda_sum() / d.area_l1);
        }
        maxes.push(m);
    }
    let spread = maxes[1] / maxes[0];
    parts.push(((spread - 1.0).abs() <= 0.25, format!(
        "corpus sum|lambda|/|S_area|_1 max {:.3} (12/36) vs {:.3} (16/64)",
        maxes[0], maxes[1]
    )));
    parts.push(budget(t0.elapsed(), 600.0));
    check(&parts)
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let spec = GridSpec::new(1, 1.5, 64.0, 12, 512, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let scales = subspace_default_scales(&spec).unwrap();
    let r = proper_subspace(&calc, &[4.0, 8.0, 16.0, 32.0], &scales).unwrap();
    let (w, c, o) = (&r.witness_fit, &r.control_fit, &r.one_param_fit);
    check(&[
        (w.slope > 0.0 && w.r2 > 0.9, format!("witness slope {:.4} R2 {:.4}", w.slope, w.r2)),
        (c.rel_slope.abs() <= 0.05, format!("control relative slope {:.4}", c.rel_slope)),
        (true, format!("one-parameter relative slope {:.4}", o.rel_slope)),
        budget(t0.elapsed(), 300.0),
    ])
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let js: Vec<i32> = (2..=6).collect();
    let ells: Vec<i32> = (-3..=1).collect();
    let ms = [Multiplier2D::constant(1.0), Multiplier2D::rational(), Multiplier2D::imaginary_power(0.5, 1.0 / 3.0)];
    let mut maxes: Vec<Vec<f64>> = Vec::new();
    let mut gap = f64::NAN;
    for (nz, nt) in [(16usize, 64usize), (24, 144)] {
        let spec = grid(4.0, 16.0, nz, nt);
        let calc = SpectralCalculus::build(&spec).unwrap();
        let row: Vec<f64> = ms
            .iter()
            .map(|m| multiplier_summary(&calc, m, &js, &ells, 0.25, QuadSpec::default()).unwrap().max_ratio)
            .collect();
        maxes.push(row);
        if nz == 16 {
            let o = DecomposeOptions::for_nu(1);
            let p = single_particle(&spec, 0, 0, o.m, o.n, o.kappa).unwrap();
            let b = region_budget(&calc, &Multiplier2D::rational(), &p, &p.rect, &js, &ells, &PsiPair::eta()).unwrap();
            gap = b.rel_gap;
        }
    }
    let stable = (0..3).all(|k| maxes[0][k].is_finite() && rel(maxes[0][k], maxes[1][k]) <= 0.25);
    let names: Vec<String> =
        ms.iter().enumerate().map(|(k, m)| format!("{} {:.3} -> {:.3}", m.name, maxes[0][k], maxes[1][k])).collect();
    check(&[
        (stable, format!("max weighted/Sobolev ratio {}", names.join(", "))),
        (gap <= 0.05, format!("region budget gap {:.2}%", 100.0 * gap)),
        budget(t0.elapsed(), 600.0),
    ])
}

fn criterion_9() -> Outcome {
    let t0 = Instant::now();
    let spec = grid(4.0, 16.0, 16, 64);
    let calc = SpectralCalculus::build(&spec).unwrap();
    let sc = ScaleGrid::covering(&calc);
    let f = random_band_limited(&spec, 0);
    let pair = FilterPair::partition();
    let reps: Vec<_> = (0..10).map(|s| khinchin_square_check(&f, &calc, &pair, &sc, 64, s).unwrap()).collect();
    let mean = reps.iter().map(|r| r.ratio).sum::<f64>() / reps.len() as f64;
    let worst_se = reps.iter().map(|r| r.rel_std_err).fold(0.0, f64::max);
    let consistent = reps.iter().all(|r| (r.ratio - mean).abs() <= 3.0 * r.ratio * r.rel_std_err);
    let max_ratio = reps.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let ratios: Vec<String> = reps.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    check(&[
        (max_ratio <= KHINCHIN_C, format!("ratio max {max_ratio:.4} (C = {KHINCHIN_C})")),
        (worst_se < 0.1, format!("worst relative standard error {:.3}", worst_se)),
        (consistent, format!("seeds 0..10 ratios [{}]", ratios.join(", "))),
        (true, format!("runtime {:.1}s", t0.elapsed().as_secs_f64())),
    ])
}

fn main() {
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let all: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "group and geometry", criterion_1),
        (2, "tiling", criterion_2),
        (3, "kernels", criterion_3),
        (4, "spectral", criterion_4),
        (5, "operator comparability", criterion_5),
        (6, "atom pipeline", criterion_6),
        (7, "proper subspace", criterion_7),
        (8, "multiplier", criterion_8),
        (9, "Khinchin randomization", criterion_9),
    ];
    let mut passed = 0;
    let mut ran = 0;
    for (k, name, f) in all {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        ran += 1;
        if o.pass {
            passed += 1;
        }
        println!(
            "criterion {k} ({name}): {} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {passed}/{ran} criteria passed");
}
