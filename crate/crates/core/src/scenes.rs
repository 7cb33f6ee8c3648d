//! Reference layouts for the object-removal (ORA) and object-addition (OAA)
//! experiments. The sensor sits above world `(0, 0)` looking along +y.

use crate::error::Result;
use crate::lidar::{LidarConfig, SensorPose};
use crate::optics::{MirrorPanel, Scene, SolidObstacle, SolidShape, Surface, Vec3};

/// Traffic cone ahead of the vehicle with a mirror panel hiding it.
#[derive(Debug, Clone, PartialEq)]
pub struct OraLayout {
    /// Cone distance ahead of the vehicle front, m.
    pub cone_distance: f64,
    /// Horizontal distance from the roof sensor back to the vehicle front, m.
    pub sensor_setback: f64,
    /// Horizontal sensor-to-panel distance, m.
    pub panel_distance: f64,
    pub panel_width: f64,
    pub panel_height: f64,
}

impl Default for OraLayout {
    fn default() -> Self {
        Self {
            cone_distance: 4.0,
            sensor_setback: 2.0,
            panel_distance: 3.0,
            panel_width: 0.6,
            panel_height: 0.4,
        }
    }
}

impl OraLayout {
    pub fn sensor_pose(&self, config: &LidarConfig) -> SensorPose {
        SensorPose::at(0.0, 0.0, config)
    }

    pub fn cone(&self) -> SolidObstacle {
        SolidObstacle::traffic_cone(Vec3::new(0.0, self.sensor_setback + self.cone_distance, 0.0))
    }

    /// Panel center height: middle of the band the cone occupies, seen from a
    /// sensor at `mount_height`, where that band crosses the panel depth.
    pub fn panel_center(&self, mount_height: f64) -> Vec3 {
        let cone = self.cone();
        let (r0, h) = match cone.shape {
            SolidShape::Cone {
                base_radius,
                height,
                ..
            } => (base_radius, height),
            SolidShape::Box { size } => (0.5 * size.y, size.z),
        };
        let yc = cone.position.y;
        let at = |target_y: f64, target_z: f64| {
            mount_height + (target_z - mount_height) * self.panel_distance / target_y
        };
        let top = at(yc, h);
        let base = at(yc - r0, 0.0);
        Vec3::new(0.0, self.panel_distance, 0.5 * (top + base))
    }

    /// Builds the scene; `tilt_deg = None` is the baseline without a mirror.
    /// Returns the scene and the cone's surface id.
    pub fn scene_at_height(&self, tilt_deg: Option<f64>, mount_height: f64) -> Result<(Scene, Surface)> {
        let mut scene = Scene::flat_ground();
        scene.solids.push(self.cone());
        if let Some(tilt) = tilt_deg {
            let facing = (-Vec3::Y).rotate_z(tilt.to_radians());
            scene.mirrors.push(MirrorPanel::vertical(
                self.panel_center(mount_height),
                facing,
                self.panel_width,
                self.panel_height,
            )?);
        }
        Ok((scene, Surface::Solid(0)))
    }

    pub fn scene(&self, tilt_deg: Option<f64>) -> Result<(Scene, Surface)> {
        self.scene_at_height(tilt_deg, LidarConfig::default().mount_height)
    }
}

/// Mirror array ahead of the sensor, yawed so it reflects beams onto a
/// roadside wall.
#[derive(Debug, Clone, PartialEq)]
pub struct OaaLayout {
    /// Forward (y) position of the panel center, m.
    pub mirror_distance: f64,
    pub mirror_lateral: f64,
    pub mirror_height: f64,
    /// Yaw of the panel away from facing the sensor, degrees.
    pub tilt_deg: f64,
    pub area: f64,
    pub panel_height: f64,
    /// Lateral (x) position of the wall's inner face, m.
    pub wall_offset: f64,
    pub wall_length: f64,
    pub wall_height: f64,
}

impl Default for OaaLayout {
    fn default() -> Self {
        Self {
            mirror_distance: 4.0,
            mirror_lateral: 0.0,
            mirror_height: 1.6,
            tilt_deg: 30.0,
            area: 0.36,
            panel_height: 0.6,
            wall_offset: 4.0,
            wall_length: 40.0,
            wall_height: 3.0,
        }
    }
}

impl OaaLayout {
    pub fn panel(&self) -> Result<MirrorPanel> {
        let facing = (-Vec3::Y).rotate_z(self.tilt_deg.to_radians());
        MirrorPanel::vertical(
            Vec3::new(self.mirror_lateral, self.mirror_distance, self.mirror_height),
            facing,
            self.area / self.panel_height,
            self.panel_height,
        )
    }

    pub fn wall(&self) -> SolidObstacle {
        let thickness = 0.2;
        SolidObstacle {
            shape: SolidShape::Box {
                size: Vec3::new(thickness, self.wall_length, self.wall_height),
            },
            position: Vec3::new(
                self.wall_offset + 0.5 * thickness,
                self.mirror_distance,
                0.5 * self.wall_height,
            ),
            yaw: 0.0,
            albedo: 0.4,
        }
    }

    /// Ground, wall and (optionally) the mirror panel.
    pub fn scene(&self, with_mirror: bool) -> Result<Scene> {
        let mut scene = Scene::flat_ground();
        scene.solids.push(self.wall());
        if with_mirror {
            scene.mirrors.push(self.panel()?);
        }
        Ok(scene)
    }
}
