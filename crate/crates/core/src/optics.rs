//! Geometric primitives for planar-mirror ray optics.
//!
//! World frame is right-handed and z-up with the ground plane at `z = 0`.
//! Mirror panels are zero-thickness, one-sided rectangles: only rays arriving
//! against the front normal interact with them.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Tolerance used for unit-norm and orthogonality checks.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Minimum ray parameter accepted as a hit; avoids re-hitting the surface a
/// ray was spawned from.
const RAY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Returns the unit vector along `self`, or `None` for a zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    /// Rotates about the world z axis by `angle` radians (counter-clockwise).
    pub fn rotate_z(self, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Builds a ray; `direction` must already be unit length.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        if !direction.is_unit() {
            return Err(Error::contract(format!(
                "ray direction must be unit length, got |d| = {}",
                direction.norm()
            )));
        }
        Ok(Self { origin, direction })
    }

    /// Builds a ray towards `direction`, normalizing it first.
    pub fn towards(origin: Vec3, direction: Vec3) -> Result<Self> {
        let d = direction
            .normalized()
            .ok_or_else(|| Error::contract("ray direction must be non-zero"))?;
        Ok(Self { origin, direction: d })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// A planar rectangular mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorPanel {
    pub center: Vec3,
    pub normal: Vec3,
    pub up: Vec3,
    pub width: f64,
    pub height: f64,
    pub reflectivity: f64,
}

impl MirrorPanel {
    pub const DEFAULT_REFLECTIVITY: f64 = 0.95;

    /// Vertical panel whose front face points along `facing` (projected onto
    /// the horizontal plane).
    pub fn vertical(center: Vec3, facing: Vec3, width: f64, height: f64) -> Result<Self> {
        let normal = Vec3::new(facing.x, facing.y, 0.0)
            .normalized()
            .ok_or_else(|| Error::contract("vertical panel needs a horizontal facing"))?;
        let panel = Self {
            center,
            normal,
            up: Vec3::Z,
            width,
            height,
            reflectivity: Self::DEFAULT_REFLECTIVITY,
        };
        panel.validate()?;
        Ok(panel)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.normal.is_unit() || !self.up.is_unit() {
            return Err(Error::contract("panel normal and up must be unit vectors"));
        }
        if self.normal.dot(self.up).abs() > UNIT_TOLERANCE {
            return Err(Error::contract("panel up must be perpendicular to its normal"));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::contract("panel width and height must be positive"));
        }
        if !(self.reflectivity > 0.0 && self.reflectivity <= 1.0) {
            return Err(Error::contract("panel reflectivity must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// In-plane horizontal axis (completes the right-handed frame with `up` and `normal`).
    pub fn right(&self) -> Vec3 {
        self.up.cross(self.normal)
    }

    /// Signed distance of `p` from the panel plane, positive on the front side.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.center).dot(self.normal)
    }

    fn intersect(&self, ray: &Ray) -> Option<(f64, Vec3)> {
        let denom = ray.direction.dot(self.normal);
        // back-face hits pass through
        if denom >= 0.0 {
            return None;
        }
        let t = (self.center - ray.origin).dot(self.normal) / denom;
        if t <= RAY_EPSILON {
            return None;
        }
        let p = ray.at(t);
        let local = p - self.center;
        let u = local.dot(self.right());
        let v = local.dot(self.up);
        (u.abs() <= 0.5 * self.width && v.abs() <= 0.5 * self.height).then_some((t, self.normal))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolidShape {
    /// Box with full edge lengths along its local x, y, z axes; the pose is its center.
    Box { size: Vec3 },
    /// Vertical truncated cone (a cylinder when both radii match); the pose is the
    /// center of the base disk.
    Cone {
        base_radius: f64,
        top_radius: f64,
        height: f64,
    },
}

/// A diffuse solid posed in the world.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidObstacle {
    pub shape: SolidShape,
    pub position: Vec3,
    /// Rotation about the vertical axis, radians.
    pub yaw: f64,
    pub albedo: f64,
}

impl SolidObstacle {
    /// A traffic cone: 50 cm tall with a 29 cm base diameter.
    pub fn traffic_cone(base_center: Vec3) -> Self {
        Self {
            shape: SolidShape::Cone {
                base_radius: 0.145,
                top_radius: 0.02,
                height: 0.5,
            },
            position: base_center,
            yaw: 0.0,
            albedo: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            SolidShape::Box { size } => size.x > 0.0 && size.y > 0.0 && size.z > 0.0,
            SolidShape::Cone {
                base_radius,
                top_radius,
                height,
            } => base_radius > 0.0 && top_radius > 0.0 && height > 0.0,
        };
        if !ok {
            return Err(Error::contract("solid dimensions must be positive"));
        }
        if !(self.albedo > 0.0 && self.albedo <= 1.0) {
            return Err(Error::contract("solid albedo must lie in (0, 1]"));
        }
        Ok(())
    }

    fn intersect(&self, ray: &Ray) -> Option<(f64, Vec3)> {
        // work in the solid's local frame
        let o = (ray.origin - self.position).rotate_z(-self.yaw);
        let d = ray.direction.rotate_z(-self.yaw);
        let (t, n) = match self.shape {
            SolidShape::Box { size } => intersect_box(o, d, size * 0.5)?,
            SolidShape::Cone {
                base_radius,
                top_radius,
                height,
            } => intersect_cone(o, d, base_radius, top_radius, height)?,
        };
        Some((t, n.rotate_z(self.yaw)))
    }
}

fn intersect_box(o: Vec3, d: Vec3, half: Vec3) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0usize;
    let mut far_axis = 0usize;
    let comps = [(o.x, d.x, half.x), (o.y, d.y, half.y), (o.z, d.z, half.z)];
    for (axis, &(oc, dc, h)) in comps.iter().enumerate() {
        if dc.abs() < 1e-15 {
            if oc.abs() > h {
                return None;
            }
            continue;
        }
        let mut t0 = (-h - oc) / dc;
        let mut t1 = (h - oc) / dc;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_near {
            t_near = t0;
            near_axis = axis;
        }
        if t1 < t_far {
            t_far = t1;
            far_axis = axis;
        }
        if t_near > t_far {
            return None;
        }
    }
    let (t, axis) = if t_near > RAY_EPSILON {
        (t_near, near_axis)
    } else if t_far > RAY_EPSILON {
        (t_far, far_axis)
    } else {
        return None;
    };
    let p = o + d * t;
    let mut n = Vec3::ZERO;
    match axis {
        0 => n.x = p.x.signum(),
        1 => n.y = p.y.signum(),
        _ => n.z = p.z.signum(),
    }
    Some((t, n))
}

fn intersect_cone(o: Vec3, d: Vec3, r0: f64, r1: f64, h: f64) -> Option<(f64, Vec3)> {
    let slope = (r1 - r0) / h;
    let mut best: Option<(f64, Vec3)> = None;
    let mut consider = |t: f64, n: Vec3| {
        if t > RAY_EPSILON && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, n));
        }
    };

    // lateral surface: x^2 + y^2 = (r0 + slope z)^2 for z in [0, h]
    let rz0 = r0 + slope * o.z;
    let a = d.x * d.x + d.y * d.y - slope * slope * d.z * d.z;
    let b = 2.0 * (o.x * d.x + o.y * d.y - slope * d.z * rz0);
    let c = o.x * o.x + o.y * o.y - rz0 * rz0;
    let mut roots = [f64::NAN; 2];
    if a.abs() > 1e-14 {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair
            let q = -0.5 * (b + b.signum() * sq);
            roots = [q / a, if q != 0.0 { c / q } else { -b / (2.0 * a) }];
        }
    } else if b.abs() > 1e-14 {
        roots[0] = -c / b;
    }
    for t in roots {
        if !t.is_finite() {
            continue;
        }
        let p = o + d * t;
        if (0.0..=h).contains(&p.z) {
            let r = r0 + slope * p.z;
            let n = Vec3::new(p.x, p.y, -slope * r).normalized().unwrap_or(Vec3::Z);
            consider(t, n);
        }
    }

    // caps
    if d.z.abs() > 1e-15 {
        for (z, r, nz) in [(0.0, r0, -1.0), (h, r1, 1.0)] {
            let t = (z - o.z) / d.z;
            let p = o + d * t;
            if p.x * p.x + p.y * p.y <= r * r {
                consider(t, Vec3::new(0.0, 0.0, nz));
            }
        }
    }
    best
}

/// Identifies which scene element a hit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Ground,
    Mirror(usize),
    Solid(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Mirror,
    Diffuse,
    Ground,
}

impl Surface {
    pub fn kind(self) -> SurfaceKind {
        match self {
            Surface::Ground => SurfaceKind::Ground,
            Surface::Mirror(_) => SurfaceKind::Mirror,
            Surface::Solid(_) => SurfaceKind::Diffuse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    pub distance: f64,
    pub surface: Surface,
    /// Outward unit normal of the surface at the hit point.
    pub normal: Vec3,
}

impl Hit {
    pub fn kind(&self) -> SurfaceKind {
        self.surface.kind()
    }
}

/// Mirrors, solids and an optional flat ground plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub mirrors: Vec<MirrorPanel>,
    pub solids: Vec<SolidObstacle>,
    /// Albedo of the `z = 0` ground plane; `None` removes the ground.
    pub ground_albedo: Option<f64>,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            mirrors: Vec::new(),
            solids: Vec::new(),
            ground_albedo: Some(Self::DEFAULT_GROUND_ALBEDO),
        }
    }
}

impl Scene {
    pub const DEFAULT_GROUND_ALBEDO: f64 = 0.2;

    /// An empty scene with only the ground plane.
    pub fn flat_ground() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.mirrors {
            m.validate()?;
        }
        for s in &self.solids {
            s.validate()?;
        }
        if let Some(a) = self.ground_albedo {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::contract("ground albedo must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Diffuse albedo of the surface, `None` for mirrors.
    pub fn albedo(&self, surface: Surface) -> Option<f64> {
        match surface {
            Surface::Ground => self.ground_albedo,
            Surface::Solid(i) => self.solids.get(i).map(|s| s.albedo),
            Surface::Mirror(_) => None,
        }
    }

    pub fn without_mirrors(&self) -> Scene {
        Scene {
            mirrors: Vec::new(),
            ..self.clone()
        }
    }
}

/// Nearest intersection of `ray` with the scene along the positive ray parameter.
pub fn intersect(ray: &Ray, scene: &Scene) -> Option<Hit> {
    intersect_excluding(ray, scene, None)
}

/// Like [`intersect`] but ignoring one surface (typically the mirror the ray
/// was just reflected from).
pub fn intersect_excluding(ray: &Ray, scene: &Scene, skip: Option<Surface>) -> Option<Hit> {
    let mut best: Option<(f64, Vec3, Surface)> = None;
    let mut offer = |t: f64, n: Vec3, s: Surface| {
        if Some(s) != skip && best.is_none_or(|(bt, _, _)| t < bt) {
            best = Some((t, n, s));
        }
    };

    if scene.ground_albedo.is_some() && ray.direction.z < 0.0 && ray.origin.z > 0.0 {
        offer(-ray.origin.z / ray.direction.z, Vec3::Z, Surface::Ground);
    }
    for (i, m) in scene.mirrors.iter().enumerate() {
        if let Some((t, n)) = m.intersect(ray) {
            offer(t, n, Surface::Mirror(i));
        }
    }
    for (i, s) in scene.solids.iter().enumerate() {
        if let Some((t, n)) = s.intersect(ray) {
            offer(t, n, Surface::Solid(i));
        }
    }
    best.map(|(t, normal, surface)| Hit {
        point: ray.at(t),
        distance: t,
        surface,
        normal,
    })
}

/// Specular reflection `v - 2 (v . n) n` of a unit direction about a unit normal.
pub fn reflect(v_in: Vec3, n: Vec3) -> Result<Vec3> {
    if !v_in.is_unit() || !n.is_unit() {
        return Err(Error::contract(format!(
            "reflect expects unit vectors, got |v| = {}, |n| = {}",
            v_in.norm(),
            n.norm()
        )));
    }
    Ok(v_in - n * (2.0 * v_in.dot(n)))
}

/// A fabricated return placed along the original emission direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualPoint {
    pub position: Vec3,
    /// Folded range `d_LM + d_MS`.
    pub range: f64,
    pub sensor_to_mirror: f64,
    pub mirror_to_surface: f64,
}

/// Places the return of a two-hop path (sensor, mirror, secondary surface) where
/// the sensor believes it is: along the original beam, at the total one-way
/// path length.
pub fn fold_path(sensor: Vec3, mirror_hit: &Hit, secondary_hit: &Hit) -> Result<VirtualPoint> {
    if mirror_hit.kind() != SurfaceKind::Mirror {
        return Err(Error::contract("fold_path: first hit must be on a mirror"));
    }
    let front = (secondary_hit.point - mirror_hit.point).dot(mirror_hit.normal);
    if front <= 0.0 {
        return Err(Error::contract(
            "fold_path: secondary hit lies behind the mirror plane",
        ));
    }
    let to_mirror = mirror_hit.point - sensor;
    let d_lm = to_mirror.norm();
    let dir = to_mirror
        .normalized()
        .ok_or_else(|| Error::contract("fold_path: sensor coincides with mirror hit"))?;
    let d_ms = secondary_hit.point.distance(mirror_hit.point);
    let range = d_lm + d_ms;
    Ok(VirtualPoint {
        position: sensor + dir * range,
        range,
        sensor_to_mirror: d_lm,
        mirror_to_surface: d_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn normal_incidence_reverses() {
        let r = reflect(Vec3::new(0.0, 0.0, -1.0), Vec3::Z).unwrap();
        assert!(close(r, Vec3::Z, 1e-15));
    }

    #[test]
    fn forty_five_degree_mirror() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = reflect(Vec3::new(s, -s, 0.0), Vec3::Y).unwrap();
        assert!(close(r, Vec3::new(s, s, 0.0), 1e-15));
    }

    #[test]
    fn reflect_rejects_non_unit() {
        assert!(matches!(
            reflect(Vec3::new(2.0, 0.0, 0.0), Vec3::Z),
            Err(Error::Contract(_))
        ));
        assert!(reflect(Vec3::X, Vec3::new(0.0, 0.0, 0.5)).is_err());
    }

    #[test]
    fn ray_straight_down_hits_ground() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 2.2), Vec3::new(0.0, 0.0, -1.0)).unwrap();
        let hit = intersect(&ray, &Scene::flat_ground()).unwrap();
        assert_eq!(hit.surface, Surface::Ground);
        assert!((hit.distance - 2.2).abs() < 1e-12);
        assert!(close(hit.point, Vec3::ZERO, 1e-12));
    }

    #[test]
    fn ray_just_outside_panel_misses_it() {
        let panel = MirrorPanel::vertical(Vec3::new(0.0, 5.0, 1.0), -Vec3::Y, 0.6, 0.4).unwrap();
        let scene = Scene {
            mirrors: vec![panel],
            solids: vec![],
            ground_albedo: None,
        };
        let origin = Vec3::new(0.0, 0.0, 1.0);
        // 1 cm beyond the right edge
        let ray = Ray::towards(origin, Vec3::new(0.31, 5.0, 1.0) - origin).unwrap();
        assert!(intersect(&ray, &scene).is_none());
        let ray = Ray::towards(origin, Vec3::new(0.29, 5.0, 1.0) - origin).unwrap();
        assert_eq!(intersect(&ray, &scene).unwrap().surface, Surface::Mirror(0));
    }

    #[test]
    fn back_face_passes_through() {
        let panel = MirrorPanel::vertical(Vec3::new(0.0, 5.0, 1.0), Vec3::Y, 0.6, 0.4).unwrap();
        let scene = Scene {
            mirrors: vec![panel],
            solids: vec![],
            ground_albedo: None,
        };
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::Y).unwrap();
        assert!(intersect(&ray, &scene).is_none());
    }

    #[test]
    fn cone_hit_matches_closed_form() {
        let cone = SolidObstacle::traffic_cone(Vec3::new(0.0, 4.0, 0.0));
        let scene = Scene {
            mirrors: vec![],
            solids: vec![cone],
            ground_albedo: Some(0.2),
        };
        let ray = Ray::new(Vec3::new(0.0, 0.0, 0.25), Vec3::Y).unwrap();
        let hit = intersect(&ray, &scene).unwrap();
        // radius at z: r0 + (r1 - r0) z / h
        let r = 0.145 + (0.02 - 0.145) * 0.25 / 0.5;
        assert_eq!(hit.surface, Surface::Solid(0));
        assert!((hit.distance - (4.0 - r)).abs() < 1e-9);
        assert!((hit.distance - 4.0).abs() < 0.1);
    }

    #[test]
    fn yawed_box_hit() {
        let wall = SolidObstacle {
            shape: SolidShape::Box {
                size: Vec3::new(2.0, 2.0, 2.0),
            },
            position: Vec3::new(0.0, 10.0, 1.0),
            yaw: std::f64::consts::FRAC_PI_4,
            albedo: 0.4,
        };
        let scene = Scene {
            mirrors: vec![],
            solids: vec![wall],
            ground_albedo: None,
        };
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::Y).unwrap();
        let hit = intersect(&ray, &scene).unwrap();
        // rotated square: the nearest corner sits sqrt(2) in front of the center
        assert!((hit.distance - (10.0 - 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn folded_range_is_additive() {
        let sensor = Vec3::ZERO;
        let mirror_hit = Hit {
            point: Vec3::new(0.0, 2.0, 0.0),
            distance: 2.0,
            surface: Surface::Mirror(0),
            normal: -Vec3::Y,
        };
        let secondary = Hit {
            point: Vec3::new(3.0, 2.0 - 1e-3, 0.0),
            distance: 3.0,
            surface: Surface::Solid(0),
            normal: -Vec3::X,
        };
        let vp = fold_path(sensor, &mirror_hit, &secondary).unwrap();
        let expected = 2.0 + secondary.point.distance(mirror_hit.point);
        assert!((vp.range - expected).abs() < 1e-12);
        assert!(vp.position.x.abs() < 1e-12 && (vp.position.y - expected).abs() < 1e-12);
    }

    #[test]
    fn retro_reflection_lands_at_twice_the_distance() {
        let sensor = Vec3::new(0.0, 0.0, 1.0);
        let mirror_hit = Hit {
            point: Vec3::new(0.0, 3.0, 1.0),
            distance: 3.0,
            surface: Surface::Mirror(0),
            normal: -Vec3::Y,
        };
        let housing = Hit {
            point: sensor,
            distance: 3.0,
            surface: Surface::Solid(0),
            normal: Vec3::Y,
        };
        let vp = fold_path(sensor, &mirror_hit, &housing).unwrap();
        assert!(close(vp.position, Vec3::new(0.0, 6.0, 1.0), 1e-12));
    }

    #[test]
    fn secondary_behind_mirror_is_rejected() {
        let mirror_hit = Hit {
            point: Vec3::new(0.0, 2.0, 0.0),
            distance: 2.0,
            surface: Surface::Mirror(0),
            normal: -Vec3::Y,
        };
        let behind = Hit {
            point: Vec3::new(0.0, 4.0, 0.0),
            distance: 2.0,
            surface: Surface::Ground,
            normal: Vec3::Z,
        };
        assert!(fold_path(Vec3::ZERO, &mirror_hit, &behind).is_err());
        assert!(fold_path(Vec3::ZERO, &behind, &mirror_hit).is_err());
    }
}
