use heisenflag::fields::{conv1_fft, GridField, GridSpec};
use heisenflag::kernels::{
    gauss_laguerre, gaussian_log_ratio, heat_kernel, origin_orbit, poisson_kernel_with, poisson_ratio_band,
};
use heisenflag::spectral::SpectralCalculus;

fn grid() -> GridSpec {
    GridSpec::new(1, 4.0, 16.0, 16, 64, true).unwrap()
}

#[test]
fn heat_kernel_against_spectral_calculus() {
    let spec = grid();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let h = heat_kernel(0.1, &spec).unwrap();
    assert!((h.integral().re - 1.0).abs() < 1e-6);
    let hs = calc.heat(&GridField::delta(&spec), 0.1).unwrap();
    assert!(h.sub(&hs).unwrap().l2() < 1e-5 * hs.l2());
    // wider kernels leak through the box; the drift at r = 1 is 1.66e-2
    let wide = heat_kernel(1.0, &spec).unwrap().integral().re - 1.0;
    assert!((wide + 1.66e-2).abs() < 5e-4, "{wide}");
}

#[test]
fn heat_semigroup() {
    let spec = grid();
    let a = heat_kernel(0.25, &spec).unwrap();
    let b = heat_kernel(0.5, &spec).unwrap();
    let c = heat_kernel(0.75, &spec).unwrap();
    let err = conv1_fft(&a, &b).unwrap().sub(&c).unwrap().l2() / c.l2();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn poisson_band_is_stable_in_nodes() {
    let spec = grid();
    let calc = SpectralCalculus::build(&spec).unwrap();
    let (lo, hi) = poisson_ratio_band(&poisson_kernel_with(&calc, 0.5, 128).unwrap(), 0.5);
    assert!((lo - 0.00696).abs() < 2e-4 && (hi - 0.1267).abs() < 2e-3, "{lo} {hi}");
    let (lo64, hi64) = poisson_ratio_band(&poisson_kernel_with(&calc, 0.5, 64).unwrap(), 0.5);
    assert!((lo64 - lo).abs() < 0.1 * lo && (hi64 - hi).abs() < 0.1 * hi);
}

#[test]
fn gaussian_upper_bound() {
    let spec = grid();
    for r in [0.25, 0.5, 1.0] {
        let h = heat_kernel(r, &spec).unwrap();
        let mut prev = f64::INFINITY;
        for d in [0.0, 0.5, 1.0] {
            let v = gaussian_log_ratio(&h, r, d);
            assert!(v.is_finite() && v <= 0.0 && v <= prev);
            prev = v;
        }
    }
}

#[test]
fn laguerre_rule_integrates_polynomials() {
    let (x, w) = gauss_laguerre(12, 0.0);
    // int_0^inf x^k e^{-x} dx = k!
    let m3: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
    assert!((m3 - 6.0).abs() < 1e-10);
    let m0: f64 = w.iter().sum();
    assert!((m0 - 1.0).abs() < 1e-12);
}

#[test]
fn origin_orbit_is_a_sublattice() {
    let (mask, idx) = origin_orbit(&grid());
    let n = mask.iter().filter(|m| **m).count();
    assert!(n > 0 && n < mask.len());
    assert!(idx > 0.0);
}
