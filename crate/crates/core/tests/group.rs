use heisenflag::group::{distance, GroupContext, HPoint, Metric};

fn p(x: f64, y: f64, t: f64) -> HPoint {
    HPoint::new(vec![x], vec![y], t).unwrap()
}

fn close(a: &HPoint, b: &HPoint, tol: f64) -> bool {
    a.x.iter().chain(&a.y).zip(b.x.iter().chain(&b.y)).all(|(u, v)| (u - v).abs() <= tol) && (a.t - b.t).abs() <= tol
}

#[test]
fn law_on_fixed_points() {
    let a = p(1.0, 0.0, 0.0);
    let b = p(0.0, 1.0, 0.0);
    // [a, b] is central: ab and ba differ only in t, by 2 S(a, b)
    let ab = a.mul(&b).unwrap();
    let ba = b.mul(&a).unwrap();
    assert_eq!(ab.x, ba.x);
    assert_eq!(ab.y, ba.y);
    assert_eq!((ab.t - ba.t).abs(), 8.0);
    assert!(close(&a.mul(&a.inv()).unwrap(), &HPoint::zero(1), 0.0));
}

#[test]
fn associativity_in_two_dimensions() {
    let a = HPoint::new(vec![0.3, -1.2], vec![2.0, 0.5], 1.5).unwrap();
    let b = HPoint::new(vec![-0.7, 0.1], vec![0.4, -2.2], -3.0).unwrap();
    let c = HPoint::new(vec![1.1, 0.9], vec![-0.6, 0.3], 0.25).unwrap();
    let l = a.mul(&b).unwrap().mul(&c).unwrap();
    let r = a.mul(&b.mul(&c).unwrap()).unwrap();
    assert!(close(&l, &r, 1e-12));
}

#[test]
fn dilations_are_automorphisms_and_scale_norms() {
    let a = p(0.5, -1.5, 2.0);
    let b = p(-0.25, 0.75, -1.0);
    for r in [0.5, 2.0, 3.7] {
        let lhs = a.dilate(r).unwrap().mul(&b.dilate(r).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().dilate(r).unwrap();
        assert!(close(&lhs, &rhs, 1e-12));
        for m in [Metric::Gauge, Metric::Koranyi] {
            let d = a.dilate(r).unwrap().norm(m);
            assert!((d - r * a.norm(m)).abs() < 1e-12 * d);
        }
    }
    assert!(a.dilate(0.0).is_err());
}

#[test]
fn norm_values() {
    assert_eq!(p(1.0, 0.0, 0.0).gauge_norm(), 1.0);
    assert_eq!(p(1.0, 0.0, 0.0).koranyi_norm(), 1.0);
    assert_eq!(p(0.0, 0.0, 4.0).gauge_norm(), 2.0);
    // (4 nu^2 t^2)^{1/4} at nu = 1, t = 1
    assert!((p(0.0, 0.0, 1.0).koranyi_norm() - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn comparison_constants() {
    let g = GroupContext::new(1).unwrap();
    assert!((g.stated_comparison_constant() - 6f64.powf(0.25)).abs() < 1e-15);
    assert!((g.sharp_comparison_constant() - 8f64.powf(0.25)).abs() < 1e-15);
    // a point attaining the sharp ratio, beyond the stated one
    let q = p(1.0, 1.0, 1.0);
    let ratio = q.koranyi_norm() / q.gauge_norm();
    assert!(ratio > g.stated_comparison_constant());
    assert!(ratio <= g.sharp_comparison_constant() + 1e-12);
    assert!(GroupContext::new(0).is_err());
}

#[test]
fn distance_is_left_invariant() {
    let a = p(0.2, 0.4, -1.0);
    let b = p(-1.0, 2.0, 3.0);
    let g = p(5.0, -3.0, 7.0);
    for m in [Metric::Gauge, Metric::Koranyi] {
        let d0 = distance(&a, &b, m).unwrap();
        let d1 = distance(&g.mul(&a).unwrap(), &g.mul(&b).unwrap(), m).unwrap();
        assert!((d0 - d1).abs() < 1e-12 * d0);
    }
}

#[test]
fn mismatched_dimensions_are_rejected() {
    assert!(HPoint::new(vec![1.0], vec![1.0, 2.0], 0.0).is_err());
    assert!(p(1.0, 0.0, 0.0).mul(&HPoint::zero(2)).is_err());
}
