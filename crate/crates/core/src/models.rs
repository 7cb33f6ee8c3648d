//! Empirical models of mirror-induced artifacts as functions of the mirror
//! state `(d, theta, A)`.
//!
//! Angle conventions, one per model term:
//! * trigonometric terms (`tan 2θ`, `cos^γ θ`) take radians;
//! * the radial polynomial `1 + a1 θ + a2 θ²` takes radians;
//! * the appearance-window boundaries `d_min`, `d_max` are linear in degrees.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kv::{fmt_f64, KeyValues};

/// Largest tilt accepted by the lateral-offset model; `tan(2θ)` diverges at 45°.
pub const MAX_LATERAL_TILT_DEG: f64 = 44.9;

/// Instantaneous mirror configuration relative to the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorState {
    /// LiDAR-to-mirror distance, m.
    pub d: f64,
    /// Tilt angle, degrees.
    pub theta_deg: f64,
    /// Reflective area, m^2.
    pub area: f64,
}

impl MirrorState {
    pub fn new(d: f64, theta_deg: f64, area: f64) -> Result<Self> {
        let s = Self { d, theta_deg, area };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) {
            return Err(Error::contract(format!("mirror distance must be positive, got {}", self.d)));
        }
        if !(0.0..90.0).contains(&self.theta_deg) {
            return Err(Error::contract(format!(
                "tilt must lie in [0, 90) degrees, got {}",
                self.theta_deg
            )));
        }
        if !(self.area > 0.0) {
            return Err(Error::contract(format!("mirror area must be positive, got {}", self.area)));
        }
        Ok(())
    }

    pub fn theta_rad(&self) -> f64 {
        self.theta_deg.to_radians()
    }
}

/// The fitted coefficients of all four artifact models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactModelParams {
    // point count
    pub c0: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub sigma: f64,
    // appearance window
    pub k: f64,
    pub b0_min: f64,
    pub b1: f64,
    pub b2: f64,
    pub b0_max: f64,
    pub c1: f64,
    pub c2: f64,
    // lateral offset
    pub c_x: f64,
    pub delta_x: f64,
    // radial distance
    pub c_r: f64,
    pub n_d: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Default for ArtifactModelParams {
    fn default() -> Self {
        Self {
            c0: 2500.0,
            beta: 1.25,
            gamma: 3.5,
            mu: 3.0,
            sigma: 1.5,
            k: 15.0,
            b0_min: -2.858,
            b1: 0.1389,
            b2: -0.3003,
            b0_max: -0.946,
            c1: 0.1389,
            c2: 1.5390,
            c_x: 0.98,
            delta_x: -0.05,
            c_r: 1.02,
            n_d: 0.88,
            a1: 0.15,
            a2: 0.08,
        }
    }
}

impl ArtifactModelParams {
    /// Parameter-file keys, in file order.
    pub const KEYS: [&'static str; 18] = [
        "c0", "beta", "gamma", "mu", "sigma", "k", "b0_min", "b1", "b2", "b0_max", "c1", "c2",
        "cX", "deltaX", "cR", "n_d", "a1", "a2",
    ];

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(key).map(|v| *v)
    }

    pub fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "c0" => &mut self.c0,
            "beta" => &mut self.beta,
            "gamma" => &mut self.gamma,
            "mu" => &mut self.mu,
            "sigma" => &mut self.sigma,
            "k" => &mut self.k,
            "b0_min" => &mut self.b0_min,
            "b1" => &mut self.b1,
            "b2" => &mut self.b2,
            "b0_max" => &mut self.b0_max,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "cX" => &mut self.c_x,
            "deltaX" => &mut self.delta_x,
            "cR" => &mut self.c_r,
            "n_d" => &mut self.n_d,
            "a1" => &mut self.a1,
            "a2" => &mut self.a2,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::contract("sigma must be positive"));
        }
        if !(self.k > 0.0) {
            return Err(Error::contract("k must be positive"));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::contract("c0 must be positive"));
        }
        if !(self.n_d > 0.0 && self.n_d <= 1.0) {
            return Err(Error::contract("n_d must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Parses a parameter file. Every key must be present exactly once and no
    /// others are allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(&Self::KEYS)?;
        kv.require_all(&Self::KEYS)?;
        let mut p = Self::default();
        for key in Self::KEYS {
            let value: f64 = kv.get(key)?.expect("required key present");
            if !value.is_finite() {
                return Err(Error::parse(kv.line_of(key), format!("`{key}` must be finite")));
            }
            *p.slot(key).expect("known key") = value;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key}={}", fmt_f64(self.get(key).expect("known key")));
        }
        out
    }
}

/// Features describing one artifact cluster (observed or predicted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactFeatures {
    /// Magnitude of the centroid vector, m.
    pub r_artifact: f64,
    /// Lateral (x) displacement of the centroid, m.
    pub x_artifact: f64,
    /// Point count. Integral for observed clusters; synthetic expectations may be fractional.
    pub n_artifact: f64,
    /// Appearance probability.
    pub p_app: f64,
}

/// Lateral offset `cX d tan(2θ) + δX`.
pub fn lateral_offset(state: &MirrorState, p: &ArtifactModelParams) -> Result<f64> {
    if state.theta_deg >= MAX_LATERAL_TILT_DEG {
        return Err(Error::Domain(format!(
            "lateral offset is undefined near the tan(2θ) singularity at 45°: θ = {}° must stay below {}°",
            state.theta_deg, MAX_LATERAL_TILT_DEG
        )));
    }
    Ok(p.c_x * state.d * (2.0 * state.theta_rad()).tan() + p.delta_x)
}

/// Perceived radial distance `cR d^n_d (1 + a1 θ + a2 θ²)`.
pub fn radial_distance(state: &MirrorState, p: &ArtifactModelParams) -> f64 {
    let t = state.theta_rad();
    p.c_r * state.d.powf(p.n_d) * (1.0 + p.a1 * t + p.a2 * t * t)
}

/// Continuous point-count expectation `c0 A^β cos^γ θ exp(-(d-μ)²/2σ²)`.
pub fn expected_point_count(state: &MirrorState, p: &ArtifactModelParams) -> f64 {
    let z = (state.d - p.mu) / p.sigma;
    p.c0 * state.area.powf(p.beta) * state.theta_rad().cos().powf(p.gamma) * (-0.5 * z * z).exp()
}

/// Number of artifact points: the expectation rounded down.
pub fn point_count(state: &MirrorState, p: &ArtifactModelParams) -> u64 {
    expected_point_count(state, p).max(0.0).floor() as u64
}

/// `(d_min, d_max)` of the appearance window.
pub fn window_bounds(state: &MirrorState, p: &ArtifactModelParams) -> (f64, f64) {
    let t = state.theta_deg;
    (
        p.b0_min + p.b1 * t + p.b2 * state.area,
        p.b0_max + p.c1 * t + p.c2 * state.area,
    )
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Product of a rising sigmoid at `d_min` and a falling one at `d_max`.
pub fn appearance_probability(state: &MirrorState, p: &ArtifactModelParams) -> f64 {
    let (d_min, d_max) = window_bounds(state, p);
    logistic(p.k * (state.d - d_min)) * logistic(-p.k * (state.d - d_max))
}

/// All four predictions for one state.
///
/// The location models are fitted independently and can disagree at extreme
/// `θ d` combinations; `|X|` is then clamped to `R` and a warning returned.
pub fn predict_features(
    state: &MirrorState,
    p: &ArtifactModelParams,
) -> Result<(ArtifactFeatures, Option<String>)> {
    let x = lateral_offset(state, p)?;
    let r = radial_distance(state, p);
    let (x, warning) = if x.abs() > r {
        (
            x.signum() * r,
            Some(format!(
                "lateral offset {x:.3} m exceeds radial distance {r:.3} m at (d={}, θ={}, A={}); clamped",
                state.d, state.theta_deg, state.area
            )),
        )
    } else {
        (x, None)
    };
    Ok((
        ArtifactFeatures {
            r_artifact: r,
            x_artifact: x,
            n_artifact: point_count(state, p) as f64,
            p_app: appearance_probability(state, p),
        },
        warning,
    ))
}
