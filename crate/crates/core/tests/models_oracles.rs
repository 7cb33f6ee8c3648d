//! Model outputs against hand evaluation of the published coefficients.

use mirrorlidar::models::{
    appearance_probability, expected_point_count, lateral_offset, point_count, predict_features,
    radial_distance, window_bounds,
};
use mirrorlidar::{ArtifactModelParams, Error, MirrorState};

fn st(d: f64, theta: f64, area: f64) -> MirrorState {
    MirrorState::new(d, theta, area).unwrap()
}

const DEG: f64 = std::f64::consts::PI / 180.0;

#[test]
fn lateral_offset_five_metres_thirty_degrees() {
    let p = ArtifactModelParams::default();
    // 0.98 * 5 * tan(60°) - 0.05
    let oracle = 0.98 * 5.0 * 3.0f64.sqrt() - 0.05;
    let x = lateral_offset(&st(5.0, 30.0, 0.36), &p).unwrap();
    assert!((x - oracle).abs() < 1e-12);
    assert!((x - 8.437).abs() < 1e-3);
}

#[test]
fn radial_distance_four_metres_thirty_degrees() {
    let p = ArtifactModelParams::default();
    let t = 30.0 * DEG;
    let oracle = 1.02 * (0.88 * 4.0f64.ln()).exp() * (1.0 + 0.15 * t + 0.08 * t * t);
    let r = radial_distance(&st(4.0, 30.0, 0.36), &p);
    assert!((r - oracle).abs() < 1e-12);
    assert!((r - 3.801).abs() < 1e-3, "{r}");
}

#[test]
fn window_bounds_thirty_degrees_small_panel() {
    let p = ArtifactModelParams::default();
    let (lo, hi) = window_bounds(&st(2.0, 30.0, 0.18), &p);
    assert!((lo - (-2.858 + 0.1389 * 30.0 - 0.3003 * 0.18)).abs() < 1e-12);
    assert!((hi - (-0.946 + 0.1389 * 30.0 + 1.5390 * 0.18)).abs() < 1e-12);
    assert!((lo - 1.255).abs() < 1e-3 && (hi - 3.498).abs() < 1e-3, "{lo} {hi}");
}

#[test]
fn point_count_at_the_envelope_peak() {
    let p = ArtifactModelParams::default();
    assert_eq!(point_count(&st(3.0, 0.0, 1.0), &p), 2500);
    // one sigma off the peak, 60° tilt, half a square metre
    let s = st(4.5, 60.0, 0.5);
    let oracle = 2500.0 * 0.5f64.powf(1.25) * 0.5f64.powf(3.5) * (-0.5f64).exp();
    assert!((expected_point_count(&s, &p) - oracle).abs() < 1e-9);
    assert_eq!(point_count(&s, &p), oracle.floor() as u64);
}

#[test]
fn appearance_is_half_at_a_window_edge_far_from_the_other() {
    let p = ArtifactModelParams::default();
    let (lo, hi) = window_bounds(&st(2.0, 40.0, 0.6), &p);
    assert!(hi - lo > 2.0);
    let at_lo = appearance_probability(&st(lo, 40.0, 0.6), &p);
    assert!((at_lo - 0.5).abs() < 1e-6, "{at_lo}");
    let mid = appearance_probability(&st(0.5 * (lo + hi), 40.0, 0.6), &p);
    assert!(mid > 0.9999);
}

#[test]
fn tilts_near_the_singularity_are_a_domain_error() {
    let p = ArtifactModelParams::default();
    assert!(matches!(lateral_offset(&st(3.0, 44.9, 0.3), &p), Err(Error::Domain(_))));
    assert!(matches!(predict_features(&st(3.0, 60.0, 0.3), &p), Err(Error::Domain(_))));
    assert!(lateral_offset(&st(3.0, 44.89, 0.3), &p).is_ok());
}

#[test]
fn qualitative_trends() {
    let p = ArtifactModelParams::default();
    // offset grows with distance and tilt
    let x = |d, t| lateral_offset(&st(d, t, 0.36), &p).unwrap();
    assert!(x(2.0, 20.0) < x(4.0, 20.0) && x(4.0, 10.0) < x(4.0, 20.0));
    // larger panels stretch the window on both sides and add points
    let w = |a| window_bounds(&st(2.0, 30.0, a), &p);
    assert!(w(0.6).0 < w(0.18).0 && w(0.6).1 > w(0.18).1);
    let n = |a| expected_point_count(&st(3.0, 20.0, a), &p);
    assert!(n(0.18) < n(0.36) && n(0.36) < n(0.6));
    // steeper tilts thin the artifact out
    assert!(expected_point_count(&st(3.0, 60.0, 0.36), &p) < expected_point_count(&st(3.0, 10.0, 0.36), &p));
}

#[test]
fn predicted_lateral_offset_never_exceeds_range() {
    let p = ArtifactModelParams::default();
    for d in [0.5, 1.0, 2.0, 5.0, 10.0] {
        for t in [0.0, 10.0, 25.0, 35.0, 44.0] {
            let (f, warning) = predict_features(&st(d, t, 0.36), &p).unwrap();
            assert!(f.x_artifact.abs() <= f.r_artifact);
            assert_eq!(warning.is_some(), lateral_offset(&st(d, t, 0.36), &p).unwrap().abs() > f.r_artifact);
        }
    }
}
