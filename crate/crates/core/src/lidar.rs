//! Ray-cast LiDAR simulation with mirror-induced omission and fabrication.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::optics::{
    fold_path, intersect, intersect_excluding, reflect, Ray, Scene, Surface, SurfaceKind, Vec3,
};
use crate::scenes::OraLayout;

/// `k` in `P = k * albedo * sigma / R^4`: a 1 m^2, albedo-1 target at 10 m
/// returns exactly 1.0.
pub const POWER_CALIBRATION: f64 = 1.0e4;

#[derive(Debug, Clone, PartialEq)]
pub struct LidarConfig {
    pub channels: usize,
    /// Lowest beam elevation, degrees.
    pub vfov_min: f64,
    /// Highest beam elevation, degrees.
    pub vfov_max: f64,
    /// Azimuth increment, degrees. Must divide 360.
    pub azimuth_step: f64,
    pub max_range: f64,
    pub scan_rate: f64,
    pub mount_height: f64,
    /// Normalized received-power threshold `P_th`.
    pub detection_threshold: f64,
    /// Effective cross-section a single beam illuminates at normal incidence, m^2.
    pub beam_cross_section: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            channels: 128,
            vfov_min: -22.5,
            vfov_max: 22.5,
            azimuth_step: 360.0 / 1024.0,
            max_range: 120.0,
            scan_rate: 10.0,
            mount_height: 2.2,
            detection_threshold: 2e-4,
            beam_cross_section: 1.0,
        }
    }
}

impl LidarConfig {
    pub const KEYS: [&'static str; 9] = [
        "channels",
        "vfov_min",
        "vfov_max",
        "azimuth_step",
        "max_range",
        "scan_rate",
        "mount_height",
        "detection_threshold",
        "beam_cross_section",
    ];

    pub fn validate(&self) -> Result<()> {
        if self.channels < 1 {
            return Err(Error::contract("lidar needs at least one channel"));
        }
        if !(self.vfov_min < self.vfov_max) {
            return Err(Error::contract("vertical FOV min must be below max"));
        }
        if !(self.azimuth_step > 0.0) {
            return Err(Error::contract("azimuth step must be positive"));
        }
        let columns = (360.0 / self.azimuth_step).round();
        if (columns * self.azimuth_step - 360.0).abs() > 1e-6 {
            return Err(Error::contract(format!(
                "azimuth step {} does not divide 360",
                self.azimuth_step
            )));
        }
        if !(self.max_range > 0.0) || !(self.scan_rate > 0.0) || !(self.mount_height >= 0.0) {
            return Err(Error::contract(
                "max range and scan rate must be positive, mount height non-negative",
            ));
        }
        if !(self.detection_threshold > 0.0 && self.detection_threshold < 1.0) {
            return Err(Error::contract("detection threshold must lie in (0, 1)"));
        }
        if !(self.beam_cross_section > 0.0) {
            return Err(Error::contract("beam cross-section must be positive"));
        }
        Ok(())
    }

    /// Reads overrides from `key=value` text; unknown keys are rejected.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(&Self::KEYS)?;
        let mut c = Self::default();
        kv.set("channels", &mut c.channels)?;
        kv.set("vfov_min", &mut c.vfov_min)?;
        kv.set("vfov_max", &mut c.vfov_max)?;
        kv.set("azimuth_step", &mut c.azimuth_step)?;
        kv.set("max_range", &mut c.max_range)?;
        kv.set("scan_rate", &mut c.scan_rate)?;
        kv.set("mount_height", &mut c.mount_height)?;
        kv.set("detection_threshold", &mut c.detection_threshold)?;
        kv.set("beam_cross_section", &mut c.beam_cross_section)?;
        c.validate()?;
        Ok(c)
    }

    pub fn columns(&self) -> usize {
        (360.0 / self.azimuth_step).round() as usize
    }

    /// Elevation of `channel`, degrees, evenly spread over the vertical FOV.
    pub fn elevation(&self, channel: usize) -> f64 {
        if self.channels == 1 {
            0.5 * (self.vfov_min + self.vfov_max)
        } else {
            self.vfov_min
                + (self.vfov_max - self.vfov_min) * channel as f64 / (self.channels - 1) as f64
        }
    }

    /// Unit beam direction in the sensor frame (x right, y forward, z up).
    /// Azimuth 0 points forward and grows clockwise seen from above.
    pub fn beam_direction(&self, channel: usize, column: usize) -> Vec3 {
        let el = self.elevation(channel).to_radians();
        let az = (column as f64 * self.azimuth_step).to_radians();
        Vec3::new(az.sin() * el.cos(), az.cos() * el.cos(), el.sin())
    }
}

/// Sensor position in the world plus heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub position: Vec3,
    /// Counter-clockwise rotation about z; 0 means the sensor looks along world +y.
    pub yaw: f64,
}

impl SensorPose {
    /// Sensor above ground point `(x, y)` at the configured mount height, facing +y.
    pub fn at(x: f64, y: f64, config: &LidarConfig) -> Self {
        Self {
            position: Vec3::new(x, y, config.mount_height),
            yaw: 0.0,
        }
    }

    pub fn forward(&self) -> Vec3 {
        Vec3::Y.rotate_z(self.yaw)
    }

    pub fn to_world_direction(&self, local: Vec3) -> Vec3 {
        local.rotate_z(self.yaw)
    }

    pub fn to_sensor(&self, world: Vec3) -> Vec3 {
        (world - self.position).rotate_z(-self.yaw)
    }

    pub fn to_world(&self, local: Vec3) -> Vec3 {
        self.position + local.rotate_z(self.yaw)
    }
}

/// Ground-truth provenance of a return. Never consumed by perception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointTag {
    Direct,
    Virtual,
    Ground,
}

impl PointTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PointTag::Direct => "direct",
            PointTag::Virtual => "virtual",
            PointTag::Ground => "ground",
        }
    }
}

impl fmt::Display for PointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PointTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "direct" => Ok(PointTag::Direct),
            "virtual" => Ok(PointTag::Virtual),
            "ground" => Ok(PointTag::Ground),
            other => Err(format!("unknown point tag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    /// Sensor frame, meters.
    pub position: Vec3,
    /// Normalized received power.
    pub intensity: f64,
    pub tag: PointTag,
    /// Surface the light actually scattered from (simulation only, not serialized).
    pub surface: Option<Surface>,
}

impl LidarPoint {
    pub fn new(position: Vec3, intensity: f64, tag: PointTag) -> Self {
        Self {
            position,
            intensity,
            tag,
            surface: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub frame: u64,
    pub timestamp: f64,
    pub points: Vec<LidarPoint>,
}

impl PointCloud {
    pub fn new(frame: u64, timestamp: f64, points: Vec<LidarPoint>) -> Self {
        Self {
            frame,
            timestamp,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn count_tag(&self, tag: PointTag) -> usize {
        self.points.iter().filter(|p| p.tag == tag).count()
    }

    /// Number of direct returns scattered by `surface`.
    pub fn count_surface(&self, surface: Surface) -> usize {
        self.points
            .iter()
            .filter(|p| p.tag != PointTag::Virtual && p.surface == Some(surface))
            .count()
    }
}

/// Normalized received power of a diffuse return, `k * albedo * sigma / R^4`,
/// clamped to `[0, 1]`.
pub fn received_power(path_length: f64, effective_cross_section: f64, albedo: f64) -> Result<f64> {
    if !(path_length > 0.0) {
        return Err(Error::contract(format!(
            "path length must be positive, got {path_length}"
        )));
    }
    let p = POWER_CALIBRATION * albedo * effective_cross_section / path_length.powi(4);
    Ok(p.clamp(0.0, 1.0))
}

fn diffuse_power(
    scene: &Scene,
    config: &LidarConfig,
    path_length: f64,
    incoming: Vec3,
    hit_normal: Vec3,
    surface: Surface,
) -> f64 {
    let albedo = scene.albedo(surface).unwrap_or(0.0);
    let cos_inc = incoming.dot(hit_normal).abs();
    received_power(path_length, config.beam_cross_section * cos_inc, albedo).unwrap_or(0.0)
}

/// First-return simulation of one beam. Returns the world-frame point.
fn trace_beam(
    scene: &Scene,
    config: &LidarConfig,
    ray: &Ray,
) -> Option<(Vec3, f64, PointTag, Surface)> {
    let hit = intersect(ray, scene)?;
    match hit.kind() {
        SurfaceKind::Ground | SurfaceKind::Diffuse => {
            if hit.distance > config.max_range {
                return None;
            }
            let power = diffuse_power(
                scene,
                config,
                hit.distance,
                ray.direction(),
                hit.normal,
                hit.surface,
            );
            let tag = if hit.kind() == SurfaceKind::Ground {
                PointTag::Ground
            } else {
                PointTag::Direct
            };
            (power >= config.detection_threshold).then_some((hit.point, power, tag, hit.surface))
        }
        SurfaceKind::Mirror => {
            let Surface::Mirror(idx) = hit.surface else {
                return None;
            };
            let reflectivity = scene.mirrors[idx].reflectivity;
            let out = reflect(ray.direction(), hit.normal).ok()?;
            let bounce = Ray::new(hit.point, out).ok()?;
            // reflected beam leaving the scene: data omission
            let second = intersect_excluding(&bounce, scene, Some(hit.surface))?;
            // a second mirror would exceed the two-hop model
            if second.kind() == SurfaceKind::Mirror {
                return None;
            }
            let vp = fold_path(ray.origin, &hit, &second).ok()?;
            if vp.range > config.max_range {
                return None;
            }
            let power = reflectivity
                * reflectivity
                * diffuse_power(scene, config, vp.range, out, second.normal, second.surface);
            (power >= config.detection_threshold).then_some((
                vp.position,
                power,
                PointTag::Virtual,
                second.surface,
            ))
        }
    }
}

/// Casts every (channel, azimuth) beam into `scene`. Points are in the sensor
/// frame, ordered channel-major then by azimuth.
pub fn scan(scene: &Scene, pose: &SensorPose, config: &LidarConfig) -> Result<PointCloud> {
    config.validate()?;
    scene.validate()?;
    let columns = config.columns();
    let per_channel: Vec<Vec<LidarPoint>> = (0..config.channels)
        .into_par_iter()
        .map(|ch| {
            let mut out = Vec::new();
            for col in 0..columns {
                let dir = pose.to_world_direction(config.beam_direction(ch, col));
                let Ok(ray) = Ray::new(pose.position, dir) else {
                    continue;
                };
                if let Some((world, power, tag, surface)) = trace_beam(scene, config, &ray) {
                    out.push(LidarPoint {
                        position: pose.to_sensor(world),
                        intensity: power,
                        tag,
                        surface: Some(surface),
                    });
                }
            }
            out
        })
        .collect();
    Ok(PointCloud::new(0, 0.0, per_channel.concat()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraSweepPoint {
    pub tilt_deg: f64,
    pub cone_points: usize,
    pub virtual_points: usize,
}

/// Ray-traces the object-removal layout at each tilt and counts the returns
/// that still come from the cone.
pub fn ora_sweep(
    layout: &OraLayout,
    tilts_deg: &[f64],
    config: &LidarConfig,
) -> Result<Vec<OraSweepPoint>> {
    let pose = layout.sensor_pose(config);
    tilts_deg
        .iter()
        .map(|&tilt| {
            let (scene, cone) = layout.scene_at_height(Some(tilt), config.mount_height)?;
            let cloud = scan(&scene, &pose, config)?;
            Ok(OraSweepPoint {
                tilt_deg: tilt,
                cone_points: cloud.count_surface(cone),
                virtual_points: cloud.count_tag(PointTag::Virtual),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_anchor() {
        assert_eq!(received_power(10.0, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn inverse_fourth_power() {
        let a = received_power(20.0, 1.0, 0.5).unwrap();
        let b = received_power(40.0, 1.0, 0.5).unwrap();
        assert!((a / b - 16.0).abs() < 1e-12);
    }

    #[test]
    fn cone_power_ratio_four_vs_eight_metres() {
        // small cross-section keeps both below the clamp
        let sigma = 0.01;
        let p4 = received_power(4.0, sigma, 0.5).unwrap();
        let p8 = received_power(8.0, sigma, 0.5).unwrap();
        let direct4 = POWER_CALIBRATION * 0.5 * sigma / 256.0;
        assert!((p4 - direct4).abs() < 1e-15);
        assert!((p4 / p8 - 16.0).abs() < 1e-6);
    }

    #[test]
    fn nonpositive_path_is_rejected() {
        assert!(received_power(0.0, 1.0, 1.0).is_err());
        assert!(received_power(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LidarConfig::default().validate().is_ok());
        let bad = LidarConfig {
            azimuth_step: 0.35,
            ..LidarConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = LidarConfig {
            vfov_min: 10.0,
            vfov_max: 5.0,
            ..LidarConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_from_kv_rejects_unknown() {
        let kv = KeyValues::parse("channels=16\nazimuth_step=1.0").unwrap();
        let c = LidarConfig::from_kv(&kv).unwrap();
        assert_eq!(c.channels, 16);
        assert_eq!(c.columns(), 360);
        let kv = KeyValues::parse("chanels=16").unwrap();
        assert!(LidarConfig::from_kv(&kv).is_err());
    }

    #[test]
    fn pose_round_trip() {
        let pose = SensorPose {
            position: Vec3::new(1.0, 2.0, 2.2),
            yaw: 0.7,
        };
        let p = Vec3::new(3.0, -1.0, 0.5);
        let back = pose.to_world(pose.to_sensor(p));
        assert!((back - p).norm() < 1e-12);
        assert!((pose.to_sensor(pose.position + pose.forward() * 5.0) - Vec3::new(0.0, 5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_scene_gives_only_ground() {
        let config = LidarConfig {
            channels: 16,
            azimuth_step: 2.0,
            ..LidarConfig::default()
        };
        let cloud = scan(&Scene::flat_ground(), &SensorPose::at(0.0, 0.0, &config), &config).unwrap();
        assert!(!cloud.is_empty());
        assert!(cloud.points.iter().all(|p| p.tag == PointTag::Ground));
        assert!(cloud
            .points
            .iter()
            .all(|p| (p.position.z + 2.2).abs() < 1e-9 && p.intensity >= config.detection_threshold));
    }
}
