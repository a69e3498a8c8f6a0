use heisenflag::atoms::{atomic_decompose, make_particle, reconstruct, AtomicDecomposition, DecomposeOptions};
use heisenflag::experiments::{random_band_limited, single_particle};
use heisenflag::fields::{GridField, GridSpec};
use heisenflag::group::HPoint;
use heisenflag::operators::{FilterPair, ScaleGrid};
use heisenflag::spectral::SpectralCalculus;
use heisenflag::tiling::AdaptedRect;
use heisenflag::Error;

fn setup() -> (GridSpec, SpectralCalculus) {
    let spec = GridSpec::new(1, 4.0, 16.0, 12, 36, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    (spec, calc)
}

#[test]
fn single_particle_decomposition() {
    let (spec, calc) = setup();
    let o = DecomposeOptions::for_nu(1);
    let p = single_particle(&spec, 0, 0, o.m, o.n, o.kappa).unwrap();
    let d = atomic_decompose(&p.a, &calc, &FilterPair::partition(), &ScaleGrid::covering(&calc), &o).unwrap();
    assert!(d.residual.l2() < 1e-6 * p.a.l2());
    assert_eq!(d.levels.len(), 11);
    assert!((d.lambda_sum() - 102.97785178983187).abs() < 1e-6, "{}", d.lambda_sum());
    assert!((d.area_l1 - 15.53006207319046).abs() < 1e-8);
    assert!(reconstruct(&d).sub(&p.a).unwrap().l2() < 1e-12 * p.a.l2());
    for li in [0, d.levels.len() / 2, d.levels.len() - 1] {
        assert!(d.level_sign_check(&calc, li, 8, 3).unwrap().max_ratio <= 1.05);
    }
}

#[test]
fn decomposition_round_trips_through_a_directory() {
    let (spec, calc) = setup();
    let f = random_band_limited(&spec, 2);
    let d = atomic_decompose(&f, &calc, &FilterPair::partition(), &ScaleGrid::covering(&calc), &DecomposeOptions::for_nu(1))
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    d.write_dir(dir.path(), Some(&calc), 4).unwrap();
    let e = AtomicDecomposition::read_dir(dir.path()).unwrap();
    assert_eq!(e.levels.len(), d.levels.len());
    assert!((e.lambda_sum() - d.lambda_sum()).abs() < 1e-12 * d.lambda_sum());
    assert!(reconstruct(&e).sub(&f).unwrap().l2() < 1e-10 * f.l2());
}

#[test]
fn particle_support_is_checked() {
    let (spec, _) = setup();
    let rect = AdaptedRect::containing(&HPoint::zero(1), 0, 0).unwrap();
    let b = GridField::from_real_fn(&spec, |z, _| z[0]);
    assert!(matches!(make_particle(&b, &rect, 1, 1, 3.0), Err(Error::Support { .. })));
}
