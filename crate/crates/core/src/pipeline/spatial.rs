use std::collections::HashMap;

use crate::optics::Vec3;

type Key = (i64, i64, i64);

/// Uniform voxel hash over a fixed point set.
#[derive(Debug, Clone)]
pub struct VoxelIndex {
    cell: f64,
    points: Vec<Vec3>,
    cells: HashMap<Key, Vec<usize>>,
}

impl VoxelIndex {
    /// `cell` must be positive.
    pub fn new(points: Vec<Vec3>, cell: f64) -> Self {
        assert!(cell > 0.0, "voxel size must be positive");
        let mut cells: HashMap<Key, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(*p, cell)).or_default().push(i);
        }
        Self { cell, points, cells }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn shell(&self, center: Key, ring: i64, mut f: impl FnMut(usize)) {
        for dx in -ring..=ring {
            for dy in -ring..=ring {
                for dz in -ring..=ring {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&(center.0 + dx, center.1 + dy, center.2 + dz)) {
                        ids.iter().copied().for_each(&mut f);
                    }
                }
            }
        }
    }

    /// Indices of all points within `radius` of `q` (inclusive).
    pub fn neighbors(&self, q: Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let rings = (radius / self.cell).ceil() as i64;
        let c = key(q, self.cell);
        let r2 = radius * radius;
        for ring in 0..=rings {
            self.shell(c, ring, |i| {
                if (self.points[i] - q).norm_squared() <= r2 {
                    out.push(i);
                }
            });
        }
        out
    }

    pub fn any_within(&self, q: Vec3, radius: f64) -> bool {
        let rings = (radius / self.cell).ceil() as i64;
        let c = key(q, self.cell);
        let r2 = radius * radius;
        let mut found = false;
        for ring in 0..=rings {
            self.shell(c, ring, |i| {
                found |= (self.points[i] - q).norm_squared() <= r2;
            });
            if found {
                return true;
            }
        }
        false
    }

    /// Exact nearest neighbor among points at most `max_rings` cells away.
    pub fn nearest(&self, q: Vec3, max_rings: i64) -> Option<(usize, f64)> {
        let c = key(q, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_rings {
            self.shell(c, ring, |i| {
                let d2 = (self.points[i] - q).norm_squared();
                if best.is_none_or(|(_, b)| d2 < b) {
                    best = Some((i, d2));
                }
            });
            // anything beyond this shell is at least `ring * cell` away
            if let Some((_, d2)) = best {
                let bound = ring as f64 * self.cell;
                if d2 <= bound * bound {
                    break;
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

fn key(p: Vec3, cell: f64) -> Key {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}
