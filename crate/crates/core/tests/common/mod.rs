//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use mirrorlidar::optics::{Hit, MirrorPanel, Surface};
use mirrorlidar::Vec3;

/// Reflection of `q` across the plane through `p0` with unit normal `n`.
pub fn mirror_image(q: Vec3, p0: Vec3, n: Vec3) -> Vec3 {
    let s = (q.x - p0.x) * n.x + (q.y - p0.y) * n.y + (q.z - p0.z) * n.z;
    Vec3::new(q.x - 2.0 * s * n.x, q.y - 2.0 * s * n.y, q.z - 2.0 * s * n.z)
}

/// Unit vector from spherical angles (radians): azimuth about +z, elevation from the xy-plane.
pub fn unit(azimuth: f64, elevation: f64) -> Vec3 {
    Vec3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

pub fn hit(point: Vec3, surface: Surface, normal: Vec3) -> Hit {
    Hit {
        point,
        distance: 0.0,
        surface,
        normal,
    }
}

/// Two-hop geometry: a sensor, a mirror plane point and normal, a beam from
/// the sensor to that point and a secondary point along the reflected beam.
pub struct FoldCase {
    pub sensor: Vec3,
    pub mirror_point: Vec3,
    pub normal: Vec3,
    pub secondary: Vec3,
}

/// Builds a fold case from raw parameters; `None` when the beam grazes the
/// mirror or arrives from behind it.
pub fn fold_case(
    sensor: Vec3,
    normal_angles: (f64, f64),
    beam_length: f64,
    beam_angles: (f64, f64),
    bounce_length: f64,
) -> Option<FoldCase> {
    let normal = unit(normal_angles.0, normal_angles.1);
    let dir = unit(beam_angles.0, beam_angles.1);
    let cos_in = dir.x * normal.x + dir.y * normal.y + dir.z * normal.z;
    // beam must travel against the normal to strike the reflective face
    if cos_in > -0.05 {
        return None;
    }
    let mirror_point = sensor + dir * beam_length;
    let out = dir - normal * (2.0 * cos_in);
    Some(FoldCase {
        sensor,
        mirror_point,
        normal,
        secondary: mirror_point + out * bounce_length,
    })
}

/// Point and unit normal of the panel's plane.
pub fn panel_plane(panel: &MirrorPanel) -> (Vec3, Vec3) {
    (panel.center, panel.normal)
}
