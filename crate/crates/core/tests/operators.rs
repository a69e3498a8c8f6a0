use heisenflag::experiments::random_band_limited;
use heisenflag::fields::{GridField, GridSpec};
use heisenflag::kernels::bulk_mask;
use heisenflag::operators::{
    area_fn, flag_maximal, grand_maximal, iterated_maximal, khinchin_square_check, nontangential_maximal, radial_maximal,
    remove_t_mean, reproduce, square_cts, square_dis, ConeSpec, DecayBounds, FilterPair, GrandMember, ScaleGrid,
};
use heisenflag::spectral::SpectralCalculus;
use heisenflag::Error;

fn small() -> (GridSpec, SpectralCalculus) {
    let spec = GridSpec::new(1, 2.0, 4.0, 8, 16, true).unwrap();
    let calc = SpectralCalculus::build(&spec).unwrap();
    (spec, calc)
}

#[test]
fn discrete_square_function_is_an_isometry() {
    let (spec, calc) = small();
    let f = random_band_limited(&spec, 3);
    let sc = ScaleGrid::covering(&calc);
    let pair = FilterPair::partition();
    let s = square_dis(&f, &calc, &pair, &sc).unwrap();
    assert!((s.l2() - f.l2()).abs() < 1e-10 * f.l2());
    let r = reproduce(&f, &calc, &pair, &sc).unwrap();
    assert!(r.sub(&f).unwrap().l2() < 1e-8 * f.l2());
}

#[test]
fn cancellation_is_enforced() {
    let (spec, calc) = small();
    let f = random_band_limited(&spec, 3);
    let err = square_dis(&f, &calc, &FilterPair::flag_poisson(), &ScaleGrid::covering(&calc)).unwrap_err();
    assert!(matches!(err, Error::Cancellation { .. }));
}

#[test]
fn area_with_zero_aperture_is_the_square_function() {
    let (spec, calc) = small();
    let f = random_band_limited(&spec, 4);
    let sc = ScaleGrid::covering(&calc);
    let cts = FilterPair::partition_cts();
    let a = area_fn(&f, &calc, &cts, 0.0, 0.0, &sc).unwrap();
    let s = square_cts(&f, &calc, &cts, &sc).unwrap();
    assert_eq!(a.values, s.values);
    let wide = area_fn(&f, &calc, &cts, 1.0, 1.0, &sc).unwrap();
    // cone averages of translates keep the L2 norm
    assert!((wide.l2() - s.l2()).abs() < 1e-5 * s.l2());
    assert!(area_fn(&f, &calc, &cts, 1.5, 0.0, &sc).is_err());
}

#[test]
fn maximal_functions_are_ordered() {
    let (spec, calc) = small();
    let f = remove_t_mean(&random_band_limited(&spec, 5));
    let sc = ScaleGrid::for_spec(&spec);
    let r = radial_maximal(&f, &calc, &sc).unwrap().re();
    let n = nontangential_maximal(&f, &calc, ConeSpec::default(), &sc).unwrap().re();
    let fam = [GrandMember::new(FilterPair::flag_poisson(), 1.0), GrandMember::new(FilterPair::gaussian(), 1.0)];
    let g = grand_maximal(&f, &calc, &fam, &sc, &DecayBounds::default()).unwrap().re();
    for i in 0..spec.len() {
        assert!(r[i] <= n[i] && n[i] <= g[i]);
    }
    assert!(ConeSpec::new(0.0).is_err());
}

#[test]
fn flag_and_iterated_maximal_band_on_a_delta() {
    let spec = GridSpec::new(1, 4.0, 16.0, 16, 64, true).unwrap();
    let sc = ScaleGrid::for_spec(&spec);
    let d = GridField::delta(&spec);
    let mf = flag_maximal(&d, &sc).re();
    let mi = iterated_maximal(&d, &sc).re();
    let bulk = bulk_mask(&spec);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..spec.len() {
        if bulk[i] && mi[i] > 0.0 {
            lo = lo.min(mf[i] / mi[i]);
            hi = hi.max(mf[i] / mi[i]);
        }
    }
    assert!((lo - 3.0 / 7.0).abs() < 1e-9 && (hi - 1.875).abs() < 1e-9, "{lo} {hi}");
}

#[test]
fn khinchin_ratio() {
    let (spec, calc) = small();
    let f = random_band_limited(&spec, 3);
    let k = khinchin_square_check(&f, &calc, &FilterPair::partition(), &ScaleGrid::covering(&calc), 32, 1).unwrap();
    assert!((k.ratio - 1.105402335201648).abs() < 1e-9, "{}", k.ratio);
    assert!(k.ratio <= 2.0 && k.rel_std_err < 0.1);
}
