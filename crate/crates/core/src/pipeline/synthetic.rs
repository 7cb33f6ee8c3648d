//! Synthetic feature campaigns drawn from known parameters, for fit
//! round-trips and calibration checks.

use rand::Rng;
use rand_distr::StandardNormal;

use super::fit::ModelKind;
use crate::models::{
    appearance_probability, expected_point_count, radial_distance, ArtifactFeatures,
    ArtifactModelParams, MirrorState, MAX_LATERAL_TILT_DEG,
};

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn grid(ds: &[f64], thetas: &[f64], areas: &[f64]) -> Vec<MirrorState> {
    let mut out = Vec::with_capacity(ds.len() * thetas.len() * areas.len());
    for &t in thetas {
        for &a in areas {
            for &d in ds {
                out.push(MirrorState::new(d, t, a).expect("grid states are valid"));
            }
        }
    }
    out
}

/// A 200-state design that exercises every parameter of `model`.
pub fn default_design(model: ModelKind) -> Vec<MirrorState> {
    match model {
        ModelKind::Offset => {
            let ds: Vec<f64> = linspace(1.0, 10.5, 20).collect();
            let ts: Vec<f64> = linspace(2.0, 38.0, 10).collect();
            grid(&ds, &ts, &[0.36])
        }
        ModelKind::Radial => {
            let ds: Vec<f64> = linspace(1.0, 10.5, 20).collect();
            let ts: Vec<f64> = linspace(0.0, 60.0, 10).collect();
            grid(&ds, &ts, &[0.36])
        }
        ModelKind::Count => {
            let ds: Vec<f64> = linspace(0.5, 6.0, 10).collect();
            grid(&ds, &[0.0, 15.0, 30.0, 45.0, 60.0], &[0.18, 0.36, 0.6, 1.0])
        }
        ModelKind::Window => {
            // tilts where both window edges fall at positive distances
            let ds: Vec<f64> = linspace(0.3, 6.7, 17).collect();
            grid(&ds, &[25.0, 30.0, 35.0, 40.0], &[0.18, 0.36, 0.6])
        }
    }
}

/// Continuous model features of `state`: no clamping, no rounding of the
/// count. The lateral offset is left at zero beyond its domain.
pub fn exact_features(state: &MirrorState, p: &ArtifactModelParams) -> ArtifactFeatures {
    let x = if state.theta_deg < MAX_LATERAL_TILT_DEG {
        ModelKind::Offset.evaluate(state, p).0
    } else {
        0.0
    };
    ArtifactFeatures {
        r_artifact: radial_distance(state, p),
        x_artifact: x,
        n_artifact: expected_point_count(state, p),
        p_app: appearance_probability(state, p),
    }
}

/// Features of every state with independent multiplicative Gaussian noise of
/// relative size `noise` on each component.
pub fn synthetic_samples<R: Rng + ?Sized>(
    states: &[MirrorState],
    params: &ArtifactModelParams,
    noise: f64,
    rng: &mut R,
) -> Vec<(MirrorState, ArtifactFeatures)> {
    states
        .iter()
        .map(|s| {
            let mut f = exact_features(s, params);
            if noise > 0.0 {
                let mut jitter = |v: &mut f64| {
                    let e: f64 = rng.sample(StandardNormal);
                    *v *= 1.0 + noise * e;
                };
                jitter(&mut f.r_artifact);
                jitter(&mut f.x_artifact);
                jitter(&mut f.n_artifact);
                jitter(&mut f.p_app);
            }
            (*s, f)
        })
        .collect()
}
