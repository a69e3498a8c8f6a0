use heisenflag::fields::{GridSet, GridSpec};
use heisenflag::group::HPoint;
use heisenflag::tiling::{
    enlarge, journe_sum, maximal_rects, tile_locate, tube_contains, AdaptedRect, Axis, TileHeight, TileId, TileLoc, Tube,
};

#[test]
fn tile_height_at_origin_and_symmetry() {
    let th = TileHeight::new(1);
    let f0 = th.bracket(&[0.0, 0.0], 1e-15, 200).unwrap().value();
    assert!((f0 - 0.25).abs() < 1e-14);
    for z in [[0.1, 0.3], [0.45, -0.2], [0.9, 0.05]] {
        let a = th.eval(&z, 1e-13).unwrap();
        let b = th.eval(&[z[0], -z[1]], 1e-13).unwrap();
        assert!((a + b - 0.5).abs() < 1e-11);
    }
}

#[test]
fn tiles_nest_and_fibers_contain_points() {
    let th = TileHeight::new(1);
    let pts = [(0.7, -1.3, 2.1), (-2.2, 0.4, -5.5), (0.05, 0.05, 0.01), (1.9, 2.8, 9.0)];
    for &(x, y, t) in &pts {
        let g = HPoint::new(vec![x], vec![y], t).unwrap();
        let mut prev: Option<TileId> = None;
        for j in -2..=2 {
            let TileLoc::Tile(id) = tile_locate(&g, j, 1e-9).unwrap() else { panic!("boundary at {j}") };
            let (lo, hi) = id.fiber(&g.packed_z(), &th).unwrap();
            assert!(lo <= t && t < hi);
            if let Some(p) = prev {
                assert_eq!(p.parent(), id);
                assert_eq!(p.ancestor(j), id);
            }
            prev = Some(id);
        }
    }
}

#[test]
fn tube_measures_and_membership() {
    let o = HPoint::zero(1);
    assert_eq!(Tube::new(o.clone(), 1.0, 1.0).unwrap().measure(), 16.0);
    assert_eq!(Tube::new(o.clone(), 0.5, 0.125).unwrap().measure(), 0.75);
    assert!(Tube::new(o, 0.0, 1.0).is_err());
    // membership follows the shear of the group law
    let c = [1.0, 0.0];
    assert!(tube_contains(&c, 0.0, 0.5, 0.0, &[1.0, 0.2], -0.8));
    assert!(!tube_contains(&c, 0.0, 0.5, 0.0, &[1.0, 0.2], 0.8));
}

#[test]
fn enlargement_contains_rectangle() {
    let r = AdaptedRect::containing(&HPoint::new(vec![0.3], vec![0.2], 0.1).unwrap(), 0, 1).unwrap();
    let t3 = enlarge(&r, 3.0).unwrap();
    let t1 = enlarge(&r, 1.0).unwrap();
    assert!(t1.is_inside(&t3));
    assert!(t3.measure() > r.measure());
    assert!(enlarge(&r, 0.5).is_err());
}

#[test]
fn journe_sum_for_a_single_tube() {
    let spec = GridSpec::new(1, 4.0, 16.0, 16, 64, true).unwrap();
    let om = GridSet::from_fn(&spec, |z, t| tube_contains(&[0.0, 0.0], 0.0, 1.0, 2.0, z, t));
    assert_eq!(om.measure(), 12.375);
    assert_eq!(maximal_rects(&om, None).unwrap().rects.len(), 3);
    let rep = journe_sum(&om, 1.0, Axis::Width, 0.5).unwrap();
    assert_eq!(rep.n_rects, 3);
    assert!((rep.ratio - 4.0 / 9.0).abs() < 1e-12);
    assert!(journe_sum(&om, 1.0, Axis::Width, 1.5).is_err());
}
