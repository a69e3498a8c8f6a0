use heisenflag::fields::{sublaplacian, GridField, GridSpec, C64};
use heisenflag::spectral::{fan_clusters, SpectralCalculus};

fn f_on(spec: &GridSpec) -> GridField {
    GridField::from_fn(spec, |z, t| {
        C64::new((-(z[0] * z[0] + 0.5 * z[1] * z[1]) - 0.05 * t * t).exp() * (1.0 + z[0]), 0.3 * (-z[1] * z[1]).exp())
    })
}

#[test]
fn parseval_and_inverse() {
    let spec = GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let f = f_on(&spec);
    let c = calc.forward(&f).unwrap();
    let e: f64 = calc.mode_energies(&c).iter().sum();
    assert!((e - f.l2().powi(2)).abs() < 1e-10 * e);
    assert!(calc.inverse(&c).sub(&f).unwrap().l2() < 1e-12 * f.l2());
}

#[test]
fn symbol_mu_is_the_sublaplacian() {
    let spec = GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let f = f_on(&spec);
    let a = sublaplacian(&f);
    let b = calc.apply_real(&f, |mu, _| mu).unwrap();
    assert!(a.sub(&b).unwrap().l2() < 1e-10 * a.l2());
}

#[test]
fn composition_is_multiplicative() {
    let spec = GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let f = f_on(&spec);
    let m1 = |mu: f64, l: f64| 1.0 / (1.0 + mu + l * l);
    let m2 = |mu: f64, l: f64| (-0.3 * mu).exp() * l.cos();
    let two = calc.apply_real(&calc.apply_real(&f, m1).unwrap(), m2).unwrap();
    let one = calc.apply_real(&f, |mu, l| m1(mu, l) * m2(mu, l)).unwrap();
    assert!(two.sub(&one).unwrap().l2() < 1e-10 * one.l2());
}

#[test]
fn cache_round_trip() {
    let spec = GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = SpectralCalculus::build_cached(&spec, Some(dir.path())).unwrap();
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
    let b = SpectralCalculus::build_cached(&spec, Some(dir.path())).unwrap();
    let f = f_on(&spec);
    let x = a.heat(&f, 0.2).unwrap();
    let y = b.heat(&f, 0.2).unwrap();
    assert!(x.sub(&y).unwrap().l2() < 1e-14 * x.l2());
}

#[test]
fn aperiodic_grids_are_rejected() {
    let spec = GridSpec::new(1, 2.0, 4.0, 8, 16, false).unwrap();
    assert!(SpectralCalculus::build(&spec).is_err());
}

#[test]
fn fan_spacing_where_resolved() {
    // lambda = pi / 16, magnetic length about 0.8 on a 0.5 grid
    let spec = GridSpec::new(1, 4.0, 32.0, 16, 64, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let cl = fan_clusters(&calc, 2, 0.05);
    let s = 4.0 * calc.modes[2].lambda.abs();
    let e: Vec<f64> = cl.iter().take(3).map(|c| c.energy / s).collect();
    assert!((e[0] - 1.90).abs() < 0.01 && (e[1] - 5.52).abs() < 0.01 && (e[2] - 8.83).abs() < 0.02, "{e:?}");
    let q = (e[2] - e[1]) / (e[1] - e[0]);
    assert!((q - 1.0).abs() <= 0.1);
}
