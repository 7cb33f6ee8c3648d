//! Line-based scene description.
//!
//! ```text
//! # one directive per line; angles in degrees
//! ground 0.2                      # albedo, or `none`
//! sensor 0 0 0                    # x y yaw (optional, default origin)
//! cone 0 6 0                      # traffic cone base center
//! cone 0 6 0 0.2 0.05 0.7 0.5     # ... base_r top_r height [albedo]
//! box 4.1 8 1.5 0.2 40 3 0 0.4    # center size_xyz yaw [albedo]
//! mirror 0 4 1.6 30 0.6 0.6 0.95  # center yaw width height [reflectivity]
//! array 3 2 0 4 1.6 30 0.3 0.3    # cols rows center yaw tile_w tile_h
//! ```
//!
//! A mirror with yaw 0 faces the sensor (its normal points along -y); positive
//! yaw turns it counter-clockwise seen from above.

use crate::error::{Error, Result};
use crate::lidar::{LidarConfig, SensorPose};
use crate::optics::{MirrorPanel, Scene, SolidObstacle, SolidShape, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub scene: Scene,
    /// Sensor ground position and yaw (degrees).
    pub sensor: (f64, f64, f64),
}

impl Default for SceneFile {
    fn default() -> Self {
        Self {
            scene: Scene::flat_ground(),
            sensor: (0.0, 0.0, 0.0),
        }
    }
}

impl SceneFile {
    pub fn pose(&self, config: &LidarConfig) -> SensorPose {
        let mut pose = SensorPose::at(self.sensor.0, self.sensor.1, config);
        pose.yaw = self.sensor.2.to_radians();
        pose
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = SceneFile::default();
        let mut seen_ground = false;
        let mut seen_sensor = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let directive = words.next().expect("non-empty line");
            let args: Vec<&str> = words.collect();
            let err = |msg: String| Error::parse(line_no, msg);
            let nums = |range: std::ops::RangeInclusive<usize>| -> Result<Vec<f64>> {
                if !range.contains(&args.len()) {
                    let expected = if range.start() == range.end() {
                        range.start().to_string()
                    } else {
                        format!("{} to {}", range.start(), range.end())
                    };
                    return Err(err(format!(
                        "`{directive}` takes {expected} values, found {}",
                        args.len()
                    )));
                }
                args.iter()
                    .map(|a| {
                        a.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(format!("invalid number `{a}`")))
                    })
                    .collect()
            };
            let check = |r: Result<()>| r.map_err(|e| err(e.to_string()));
            match directive {
                "ground" => {
                    if seen_ground {
                        return Err(err("duplicate `ground`".into()));
                    }
                    seen_ground = true;
                    if args == ["none"] {
                        out.scene.ground_albedo = None;
                    } else {
                        out.scene.ground_albedo = Some(nums(1..=1)?[0]);
                    }
                }
                "sensor" => {
                    if seen_sensor {
                        return Err(err("duplicate `sensor`".into()));
                    }
                    seen_sensor = true;
                    let v = nums(2..=3)?;
                    out.sensor = (v[0], v[1], v.get(2).copied().unwrap_or(0.0));
                }
                "cone" => {
                    let v = nums(3..=7)?;
                    let mut cone = SolidObstacle::traffic_cone(Vec3::new(v[0], v[1], v[2]));
                    match v.len() {
                        3 => {}
                        6 | 7 => {
                            cone.shape = SolidShape::Cone {
                                base_radius: v[3],
                                top_radius: v[4],
                                height: v[5],
                            };
                            if let Some(&a) = v.get(6) {
                                cone.albedo = a;
                            }
                        }
                        n => return Err(err(format!("`cone` takes 3, 6 or 7 values, found {n}"))),
                    }
                    check(cone.validate())?;
                    out.scene.solids.push(cone);
                }
                "box" => {
                    let v = nums(7..=8)?;
                    let solid = SolidObstacle {
                        shape: SolidShape::Box {
                            size: Vec3::new(v[3], v[4], v[5]),
                        },
                        position: Vec3::new(v[0], v[1], v[2]),
                        yaw: v[6].to_radians(),
                        albedo: v.get(7).copied().unwrap_or(0.5),
                    };
                    check(solid.validate())?;
                    out.scene.solids.push(solid);
                }
                "mirror" => {
                    let v = nums(6..=7)?;
                    let facing = (-Vec3::Y).rotate_z(v[3].to_radians());
                    let mut panel = MirrorPanel::vertical(Vec3::new(v[0], v[1], v[2]), facing, v[4], v[5])
                        .map_err(|e| err(e.to_string()))?;
                    if let Some(&r) = v.get(6) {
                        panel.reflectivity = r;
                        check(panel.validate())?;
                    }
                    out.scene.mirrors.push(panel);
                }
                "array" => {
                    let v = nums(8..=8)?;
                    let (cols, rows) = (v[0], v[1]);
                    if cols < 1.0 || rows < 1.0 || cols.fract() != 0.0 || rows.fract() != 0.0 {
                        return Err(err("array columns and rows must be positive integers".into()));
                    }
                    let yaw = v[5].to_radians();
                    let (tw, th) = (v[6], v[7]);
                    let facing = (-Vec3::Y).rotate_z(yaw);
                    let right = Vec3::Z.cross(facing);
                    let center = Vec3::new(v[2], v[3], v[4]);
                    for r in 0..rows as usize {
                        for c in 0..cols as usize {
                            let du = (c as f64 - 0.5 * (cols - 1.0)) * tw;
                            let dv = (r as f64 - 0.5 * (rows - 1.0)) * th;
                            let tile = MirrorPanel::vertical(center + right * du + Vec3::Z * dv, facing, tw, th)
                                .map_err(|e| err(e.to_string()))?;
                            out.scene.mirrors.push(tile);
                        }
                    }
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        out.scene.validate()?;
        Ok(out)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
