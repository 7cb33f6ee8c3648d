//! Frame differencing, radius clustering and per-cluster features.

use super::spatial::VoxelIndex;
use crate::error::{Error, Result};
use crate::lidar::{LidarPoint, PointCloud};
use crate::models::ArtifactFeatures;
use crate::optics::Vec3;

/// Clustering and differencing settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    pub difference_radius: f64,
    pub cluster_radius: f64,
    pub min_cluster_points: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            difference_radius: 0.10,
            cluster_radius: 0.5,
            min_cluster_points: 5,
        }
    }
}

/// Attacked points with no baseline neighbor within `radius`. A non-positive
/// radius disables the test and returns every attacked point.
pub fn frame_difference(attacked: &PointCloud, baseline: &PointCloud, radius: f64) -> PointCloud {
    if radius <= 0.0 || baseline.is_empty() {
        return attacked.clone();
    }
    let index = VoxelIndex::new(baseline.positions(), radius);
    let points = attacked
        .points
        .iter()
        .filter(|p| !index.any_within(p.position, radius))
        .copied()
        .collect();
    PointCloud::new(attacked.frame, attacked.timestamp, points)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clustering: points closer than `radius` share a cluster.
/// Clusters with fewer than `min_points` members are dropped. Each cluster's
/// indices are ascending; clusters are ordered by their first index.
pub fn cluster_indices(points: &[Vec3], radius: f64, min_points: usize) -> Vec<Vec<usize>> {
    assert!(radius > 0.0, "cluster radius must be positive");
    let index = VoxelIndex::new(points.to_vec(), radius);
    let mut parent: Vec<usize> = (0..points.len()).collect();
    for (i, &p) in points.iter().enumerate() {
        for j in index.neighbors(p, radius) {
            if j > i {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..points.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups
        .into_values()
        .filter(|g| g.len() >= min_points.max(1))
        .collect()
}

/// Clusters a cloud, returning each cluster as its own cloud.
pub fn cluster(cloud: &PointCloud, radius: f64, min_points: usize) -> Vec<PointCloud> {
    cluster_indices(&cloud.positions(), radius, min_points)
        .into_iter()
        .map(|ids| {
            let pts: Vec<LidarPoint> = ids.iter().map(|&i| cloud.points[i]).collect();
            PointCloud::new(cloud.frame, cloud.timestamp, pts)
        })
        .collect()
}

pub fn centroid(points: &[LidarPoint]) -> Option<Vec3> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Vec3::ZERO, |a, p| a + p.position);
    Some(sum / points.len() as f64)
}

/// Location and size of one artifact cluster. `p_app` is 1: the cluster appeared.
pub fn extract_features(cluster: &PointCloud) -> Result<ArtifactFeatures> {
    let c = centroid(&cluster.points)
        .ok_or_else(|| Error::InsufficientData("cannot extract features of an empty cluster".into()))?;
    Ok(ArtifactFeatures {
        r_artifact: c.norm(),
        x_artifact: c.x,
        n_artifact: cluster.len() as f64,
        p_app: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lidar::PointTag;

    fn cloud(pts: &[Vec3]) -> PointCloud {
        PointCloud::new(0, 0.0, pts.iter().map(|&p| LidarPoint::new(p, 1.0, PointTag::Direct)).collect())
    }

    #[test]
    fn difference_edge_cases() {
        let a = cloud(&[Vec3::new(0.0, 1.0, 0.0), Vec3::new(2.0, 1.0, 0.0)]);
        assert!(frame_difference(&a, &a, 0.1).is_empty());
        assert_eq!(frame_difference(&a, &a, 0.0).len(), 2);
        let b = cloud(&[Vec3::new(0.0, 1.05, 0.0)]);
        let diff = frame_difference(&a, &b, 0.1);
        assert_eq!(diff.len(), 1);
        assert_eq!(diff.points[0].position.x, 2.0);
    }

    #[test]
    fn two_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            let o = i as f64 * 0.05;
            pts.push(Vec3::new(o, 0.0, 0.0));
            pts.push(Vec3::new(5.0 + o, 0.0, 0.0));
        }
        let c = cluster(&cloud(&pts), 0.5, 3);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|k| k.len() == 10));
    }

    #[test]
    fn sparse_noise_yields_nothing() {
        let pts: Vec<Vec3> = (0..20).map(|i| Vec3::new(i as f64 * 2.0, 0.0, 0.0)).collect();
        assert!(cluster(&cloud(&pts), 0.5, 2).is_empty());
    }

    #[test]
    fn features_of_simple_clusters() {
        let f = extract_features(&cloud(&[Vec3::new(3.0, 4.0, 0.0)])).unwrap();
        assert_eq!((f.r_artifact, f.x_artifact, f.n_artifact), (5.0, 3.0, 1.0));
        let f = extract_features(&cloud(&[Vec3::new(1.0, 4.0, 0.0), Vec3::new(-1.0, 4.0, 0.0)])).unwrap();
        assert_eq!((f.r_artifact, f.x_artifact), (4.0, 0.0));
        assert!(extract_features(&PointCloud::default()).is_err());
    }
}
