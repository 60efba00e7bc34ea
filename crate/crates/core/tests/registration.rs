use bofscan_core::imaging::synth_bscan;
use bofscan_core::registration::{ncc, rigid_register, warp, AxisRange, RigidParams, SearchSpace};

fn scan(seed: u64) -> bofscan_core::GrayImageF64 {
    synth_bscan::<f64>(seed, 3, 384, 256).unwrap().0
}

#[test]
fn self_registration_is_identity_with_unit_score() {
    let fixed = scan(4);
    let r = rigid_register(&fixed, &fixed, &SearchSpace::default()).unwrap();
    assert_eq!(r.params, RigidParams::identity());
    assert!((r.score - 1.0).abs() < 1e-12);
}

#[test]
fn recovers_rotation_and_scale() {
    let fixed = scan(8);
    let truth = RigidParams::new(4.0, 1.05, 0.0, 0.0).unwrap();
    let moving = warp(&fixed, &truth);
    let space = SearchSpace { scale: AxisRange::new(0.9, 1.1, 0.01), ..SearchSpace::default() };
    let r = rigid_register(&fixed, &moving, &space).unwrap();
    let want = truth.inverse();
    assert!((r.params.angle - want.angle).abs() <= 1.0, "{:?} vs {want:?}", r.params);
    assert!((r.params.scale - want.scale).abs() <= 0.01, "{:?} vs {want:?}", r.params);
    assert!(r.score >= ncc(&fixed, &moving).unwrap());
}

#[test]
fn recovers_translation_with_high_score() {
    let fixed = scan(21);
    let moving = warp(&fixed, &RigidParams::new(0.0, 1.0, 7.0, -3.0).unwrap());
    let space = SearchSpace { translation_radius: 8.0, ..SearchSpace::default() };
    let r = rigid_register(&fixed, &moving, &space).unwrap();
    assert!((r.params.tx + 7.0).abs() <= 1.0 && (r.params.ty - 3.0).abs() <= 1.0, "{:?}", r.params);
    assert!(r.score >= 0.98);
    for pair in r.levels.windows(2) {
        assert!(pair[1].full_score >= pair[0].full_score);
    }
}
