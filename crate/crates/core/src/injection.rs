//! Model-driven artifact injection: a probabilistic trigger followed by a
//! Gaussian phantom cluster appended to the native scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::fmt_sig9;
use crate::lidar::{LidarPoint, PointCloud, PointTag, SensorPose};
use crate::models::{
    appearance_probability, lateral_offset, point_count, predict_features, ArtifactModelParams,
    MirrorState,
};
use crate::optics::{MirrorPanel, Vec3};

/// Name of the random generator behind [`InjectionConfig::rng`].
pub const GENERATOR: &str = "ChaCha8Rng";

/// Intensity assigned to injected points.
pub const INJECTED_INTENSITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionConfig {
    pub params: ArtifactModelParams,
    /// Per-axis standard deviation of the phantom cluster (sensor frame), m.
    pub spread: Vec3,
    /// Cluster centroid height above ground, m.
    pub centroid_height: f64,
    /// Sensor height above ground, m.
    pub sensor_height: f64,
    pub seed: u64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            params: ArtifactModelParams::default(),
            spread: Vec3::new(0.10, 0.10, 0.25),
            centroid_height: 1.0,
            sensor_height: 2.2,
            seed: 0,
        }
    }
}

impl InjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spread.x > 0.0 && self.spread.y > 0.0 && self.spread.z > 0.0) {
            return Err(Error::contract("cluster spread must be positive on every axis"));
        }
        self.params.validate()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionReport {
    pub frame: u64,
    pub triggered: bool,
    /// The uniform draw compared against the appearance probability.
    pub r: f64,
    pub p_app: f64,
    pub n_injected: usize,
    /// Sensor-frame centroid; only set when triggered.
    pub centroid: Option<Vec3>,
    pub generator: &'static str,
    pub warning: Option<String>,
}

impl InjectionReport {
    pub const CSV_HEADER: &'static str = "frame,triggered,r,N,cx,cy,cz";

    pub fn csv_row(&self) -> String {
        let (cx, cy, cz) = match self.centroid {
            Some(c) => (fmt_sig9(c.x), fmt_sig9(c.y), fmt_sig9(c.z)),
            None => (String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{cx},{cy},{cz}",
            self.frame,
            self.triggered,
            fmt_sig9(self.r),
            self.n_injected
        )
    }
}

/// Mirror state seen from `pose`: distance to the panel center, angle between
/// the panel normal and the line of sight (degrees), and panel area.
pub fn extract_state(pose: &SensorPose, panel: &MirrorPanel) -> Result<MirrorState> {
    let los = panel.center - pose.position;
    if los.dot(pose.forward()) <= 0.0 {
        return Err(Error::contract("mirror panel is behind the sensor"));
    }
    let d = los.norm();
    let cos_theta = (-panel.normal.dot(los) / d).clamp(-1.0, 1.0);
    let theta_deg = cos_theta.acos().to_degrees();
    if theta_deg >= 90.0 {
        return Err(Error::contract("mirror panel faces away from the sensor"));
    }
    MirrorState::new(d, theta_deg, panel.area())
}

/// Sensor-frame centroid from radial distance and lateral offset. The residual
/// range goes entirely to the forward axis; the height offset is applied
/// afterwards without renormalizing.
pub fn convert_to_3d(r: f64, x: f64, config: &InjectionConfig) -> Result<Vec3> {
    if r < x.abs() {
        return Err(Error::contract(format!(
            "radial distance {r} is smaller than |lateral offset| {}",
            x.abs()
        )));
    }
    Ok(Vec3::new(
        x,
        (r * r - x * x).sqrt(),
        config.centroid_height - config.sensor_height,
    ))
}

/// Runs one trigger-and-synthesize cycle. Native points are kept in order and
/// injected points appended.
pub fn inject<R: Rng + ?Sized>(
    native: &PointCloud,
    state: &MirrorState,
    config: &InjectionConfig,
    rng: &mut R,
) -> Result<(PointCloud, InjectionReport)> {
    state.validate()?;
    config.validate()?;
    // surface the domain error before consuming randomness
    lateral_offset(state, &config.params)?;

    let p_app = appearance_probability(state, &config.params);
    let r: f64 = rng.random();
    let mut out = native.clone();
    let mut report = InjectionReport {
        frame: native.frame,
        triggered: r < p_app,
        r,
        p_app,
        n_injected: 0,
        centroid: None,
        generator: GENERATOR,
        warning: None,
    };
    if !report.triggered {
        return Ok((out, report));
    }

    let (features, warning) = predict_features(state, &config.params)?;
    let n = point_count(state, &config.params) as usize;
    let centroid = convert_to_3d(features.r_artifact, features.x_artifact, config)?;
    out.points.reserve(n);
    for _ in 0..n {
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let gz: f64 = rng.sample(StandardNormal);
        let p = centroid
            + Vec3::new(
                gx * config.spread.x,
                gy * config.spread.y,
                gz * config.spread.z,
            );
        out.points
            .push(LidarPoint::new(p, INJECTED_INTENSITY, PointTag::Virtual));
    }
    report.n_injected = n;
    report.centroid = Some(centroid);
    report.warning = warning;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lidar::LidarConfig;

    fn native() -> PointCloud {
        PointCloud::new(
            7,
            0.7,
            vec![
                LidarPoint::new(Vec3::new(1.0, 2.0, -2.2), 0.3, PointTag::Ground),
                LidarPoint::new(Vec3::new(-1.0, 5.0, -1.0), 0.9, PointTag::Direct),
            ],
        )
    }

    #[test]
    fn convert_to_3d_cases() {
        let c = InjectionConfig::default();
        let z0 = 1.0 - 2.2;
        let p = convert_to_3d(5.0, 0.0, &c).unwrap();
        assert_eq!(p, Vec3::new(0.0, 5.0, z0));
        let p = convert_to_3d(5.0, 3.0, &c).unwrap();
        assert!((p.y - 4.0).abs() < 1e-12 && p.x == 3.0);
        let p = convert_to_3d(2.5, 2.5, &c).unwrap();
        assert_eq!(p.y, 0.0);
        assert!(convert_to_3d(2.0, -2.5, &c).is_err());
    }

    #[test]
    fn extract_state_geometry() {
        let config = LidarConfig::default();
        let pose = SensorPose {
            position: Vec3::ZERO,
            yaw: 0.0,
        };
        let panel = MirrorPanel::vertical(Vec3::new(0.0, 5.0, 1.0), -Vec3::Y, 0.6, 0.3).unwrap();
        let s = extract_state(&pose, &panel).unwrap();
        assert!((s.d - 26f64.sqrt()).abs() < 1e-12);
        let expected = (5.0 / 26f64.sqrt()).acos().to_degrees();
        assert!((s.theta_deg - expected).abs() < 1e-9);
        assert!((s.area - 0.18).abs() < 1e-12);

        let level = SensorPose::at(0.0, 0.0, &config);
        let facing = MirrorPanel::vertical(Vec3::new(0.0, 5.0, 2.2), -Vec3::Y, 0.6, 0.6).unwrap();
        assert!(extract_state(&level, &facing).unwrap().theta_deg.abs() < 1e-6);

        let behind = MirrorPanel::vertical(Vec3::new(0.0, -5.0, 2.2), Vec3::Y, 0.6, 0.6).unwrap();
        assert!(extract_state(&level, &behind).is_err());
    }

    #[test]
    fn out_of_window_leaves_scan_untouched() {
        let state = MirrorState::new(10.0, 30.0, 0.18).unwrap();
        let config = InjectionConfig::default();
        let mut rng = config.rng();
        let (out, report) = inject(&native(), &state, &config, &mut rng).unwrap();
        assert!(report.p_app < 1e-10);
        assert!(report.r > 1e-10);
        assert!(!report.triggered);
        assert_eq!(out, native());
        assert!(report.centroid.is_none());
    }

    #[test]
    fn in_window_appends_point_count() {
        let state = MirrorState::new(2.4, 30.0, 0.18).unwrap();
        let config = InjectionConfig {
            seed: 42,
            ..InjectionConfig::default()
        };
        let (out, report) = inject(&native(), &state, &config, &mut config.rng()).unwrap();
        assert!(report.triggered);
        assert_eq!(report.n_injected, 163);
        assert_eq!(out.len(), native().len() + 163);
        assert_eq!(&out.points[..2], &native().points[..]);
        assert!(out.points[2..].iter().all(|p| p.tag == PointTag::Virtual && p.intensity == 0.5));
    }

    #[test]
    fn open_window_with_empty_envelope() {
        let state = MirrorState::new(2.4, 30.0, 0.18).unwrap();
        let mut config = InjectionConfig::default();
        config.params.c0 = 1e-3;
        let (out, report) = inject(&native(), &state, &config, &mut config.rng()).unwrap();
        assert!(report.triggered);
        assert_eq!(report.n_injected, 0);
        assert_eq!(out.len(), native().len());
    }

    #[test]
    fn singular_tilt_is_refused() {
        let state = MirrorState::new(3.0, 45.0, 0.36).unwrap();
        let config = InjectionConfig::default();
        assert!(matches!(
            inject(&native(), &state, &config, &mut config.rng()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn report_row_format() {
        let state = MirrorState::new(10.0, 30.0, 0.18).unwrap();
        let config = InjectionConfig::default();
        let (_, report) = inject(&native(), &state, &config, &mut config.rng()).unwrap();
        let row = report.csv_row();
        assert!(row.starts_with("7,false,"));
        assert!(row.ends_with(",0,,,"));
    }
}
