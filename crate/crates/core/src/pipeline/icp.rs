//! Point-to-point ICP with trimmed pairing.

use nalgebra::{Matrix3, Vector3};

use super::spatial::VoxelIndex;
use crate::error::{Error, Result};
use crate::lidar::PointCloud;
use crate::optics::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once the residual changes by less than this between iterations, m.
    pub tolerance: f64,
    /// Fraction of worst pairs dropped each iteration.
    pub trim_fraction: f64,
    /// Voxel size of the target index, m.
    pub cell_size: f64,
    /// Pairs farther than this many voxels are ignored.
    pub max_search_rings: i64,
    /// Only points above this height take part. Ground returns sit on rings
    /// centred on the sensor, which makes yaw nearly unobservable and traps
    /// the iteration, so it pays to drop them.
    pub min_z: Option<f64>,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-9,
            trim_fraction: 0.10,
            cell_size: 0.5,
            max_search_rings: 8,
            min_z: None,
        }
    }
}

/// Rigid transform `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::ZERO,
        }
    }

    /// Rotation by `yaw` about z followed by `translation`.
    pub fn from_yaw(yaw: f64, translation: Vec3) -> Self {
        Self {
            rotation: *nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), yaw).matrix(),
            translation,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let v = self.rotation * to_na(p);
        Vec3::new(v.x, v.y, v.z) + self.translation
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.apply(first.translation),
        }
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn transform_cloud(&self, cloud: &PointCloud) -> PointCloud {
        let mut out = cloud.clone();
        for p in &mut out.points {
            p.position = self.apply(p.position);
        }
        out
    }
}

fn to_na(p: Vec3) -> Vector3<f64> {
    Vector3::new(p.x, p.y, p.z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source points onto the target.
    pub transform: RigidTransform,
    /// Root-mean-square distance of the kept pairs at the last pairing, m.
    pub residual: f64,
    pub iterations: usize,
    /// Residual at each pairing step.
    pub history: Vec<f64>,
}

/// Closed-form least-squares rigid alignment of paired points (SVD of the
/// cross-covariance).
pub fn best_fit_transform(src: &[Vec3], dst: &[Vec3]) -> RigidTransform {
    debug_assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let cs = src.iter().fold(Vec3::ZERO, |a, &p| a + p) / n;
    let cd = dst.iter().fold(Vec3::ZERO, |a, &p| a + p) / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += to_na(*s - cs) * to_na(*d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let v = v_t.transpose();
    let mut fix = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        fix[(2, 2)] = -1.0;
    }
    let rotation = v * fix * u.transpose();
    let rc = rotation * to_na(cs);
    RigidTransform {
        rotation,
        translation: cd - Vec3::new(rc.x, rc.y, rc.z),
    }
}

/// Aligns `source` onto `target`.
pub fn icp_align(source: &PointCloud, target: &PointCloud, config: &IcpConfig) -> Result<IcpResult> {
    let keep = |c: &PointCloud| -> Vec<Vec3> {
        c.points
            .iter()
            .map(|p| p.position)
            .filter(|p| config.min_z.is_none_or(|z| p.z > z))
            .collect()
    };
    let (src, dst) = (keep(source), keep(target));
    if src.len() < 3 || dst.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "ICP needs at least 3 points per cloud (source {}, target {})",
            src.len(),
            dst.len()
        )));
    }
    let index = VoxelIndex::new(dst, config.cell_size);
    let mut transform = RigidTransform::identity();
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..config.max_iterations.max(1) {
        iterations += 1;
        let moved: Vec<Vec3> = src.iter().map(|&p| transform.apply(p)).collect();
        let mut pairs: Vec<(usize, usize, f64)> = moved
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| {
                index
                    .nearest(p, config.max_search_rings)
                    .map(|(j, d)| (i, j, d))
            })
            .collect();
        if pairs.len() < 3 {
            return Err(Error::InsufficientData(
                "ICP found fewer than 3 correspondences".into(),
            ));
        }
        pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        let keep = ((pairs.len() as f64) * (1.0 - config.trim_fraction))
            .ceil()
            .max(3.0) as usize;
        pairs.truncate(keep.min(pairs.len()));

        let rms = (pairs.iter().map(|p| p.2 * p.2).sum::<f64>() / pairs.len() as f64).sqrt();
        let converged = history
            .last()
            .is_some_and(|&prev: &f64| (prev - rms).abs() < config.tolerance);
        history.push(rms);
        if converged || rms == 0.0 {
            break;
        }

        let a: Vec<Vec3> = pairs.iter().map(|p| moved[p.0]).collect();
        let b: Vec<Vec3> = pairs.iter().map(|p| index.points()[p.1]).collect();
        let step = best_fit_transform(&a, &b);
        transform = step.compose(&transform);
    }

    Ok(IcpResult {
        transform,
        residual: *history.last().expect("at least one iteration"),
        iterations,
        history,
    })
}
