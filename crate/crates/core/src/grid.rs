//! 2-D occupancy grid from sensor-frame point clouds over a flat ground plane.

use std::fmt;

use crate::error::{Error, Result};
use crate::kv::{fmt_f64, KeyValues};
use crate::lidar::PointCloud;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Cell edge, m.
    pub cell_size: f64,
    /// Sensor-frame x of the grid's left edge, m.
    pub origin_x: f64,
    /// Sensor-frame y of the grid's near edge, m.
    pub origin_y: f64,
    /// Extent along x, m.
    pub width: f64,
    /// Extent along y, m.
    pub depth: f64,
    /// Points at most this high above the ground count as free evidence, m.
    pub ground_threshold: f64,
    /// Elevated points a cell needs to be occupied.
    pub occupancy_threshold: u32,
    /// Only the most recent `frames` clouds are integrated.
    pub frames: usize,
    /// Sensor height above the ground plane, m.
    pub sensor_height: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            cell_size: 0.2,
            origin_x: -10.0,
            origin_y: -2.0,
            width: 20.0,
            depth: 30.0,
            ground_threshold: 0.15,
            occupancy_threshold: 3,
            frames: 5,
            sensor_height: 2.2,
        }
    }
}

fn cells_along(extent: f64, cell: f64) -> Option<usize> {
    let n = (extent / cell).round();
    ((n * cell - extent).abs() <= 1e-9 * extent.max(1.0) && n >= 1.0).then_some(n as usize)
}

impl GridConfig {
    pub const KEYS: [&'static str; 9] = [
        "cell_size",
        "origin_x",
        "origin_y",
        "width",
        "depth",
        "ground_threshold",
        "occupancy_threshold",
        "frames",
        "sensor_height",
    ];

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) {
            return Err(Error::contract("cell size must be positive"));
        }
        if !(self.ground_threshold > 0.0) || self.occupancy_threshold == 0 || self.frames == 0 {
            return Err(Error::contract("grid thresholds and frame count must be positive"));
        }
        if cells_along(self.width, self.cell_size).is_none()
            || cells_along(self.depth, self.cell_size).is_none()
        {
            return Err(Error::contract(format!(
                "extent {} x {} m is not a whole number of {} m cells",
                self.width, self.depth, self.cell_size
            )));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(&Self::KEYS)?;
        let mut c = Self::default();
        kv.set("cell_size", &mut c.cell_size)?;
        kv.set("origin_x", &mut c.origin_x)?;
        kv.set("origin_y", &mut c.origin_y)?;
        kv.set("width", &mut c.width)?;
        kv.set("depth", &mut c.depth)?;
        kv.set("ground_threshold", &mut c.ground_threshold)?;
        kv.set("occupancy_threshold", &mut c.occupancy_threshold)?;
        kv.set("frames", &mut c.frames)?;
        kv.set("sensor_height", &mut c.sensor_height)?;
        c.validate()?;
        Ok(c)
    }

    pub fn columns(&self) -> usize {
        cells_along(self.width, self.cell_size).expect("validated extent")
    }

    pub fn rows(&self) -> usize {
        cells_along(self.depth, self.cell_size).expect("validated extent")
    }

    /// `(column, row)` of the cell containing sensor-frame `(x, y)`.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let c = ((x - self.origin_x) / self.cell_size).floor();
        let r = ((y - self.origin_y) / self.cell_size).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.columns() && (r as usize) < self.rows())
            .then(|| (c as usize, r as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Free => 'F',
            Cell::Occupied => 'O',
            Cell::Unknown => 'U',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub config: GridConfig,
    /// Row-major, row 0 nearest the sensor.
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn columns(&self) -> usize {
        self.config.columns()
    }

    pub fn rows(&self) -> usize {
        self.config.rows()
    }

    pub fn get(&self, column: usize, row: usize) -> Cell {
        self.cells[row * self.columns() + column]
    }

    pub fn at(&self, x: f64, y: f64) -> Option<Cell> {
        self.config.cell_of(x, y).map(|(c, r)| self.get(c, r))
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.cells.iter().filter(|c| **c == kind).count()
    }

    /// Cells whose centers lie within `radius` of sensor-frame `(x, y)`,
    /// plus the cell containing the point itself.
    pub fn cells_near(&self, x: f64, y: f64, radius: f64) -> Vec<(usize, usize)> {
        let s = self.config.cell_size;
        let mut out = Vec::new();
        for r in 0..self.rows() {
            for c in 0..self.columns() {
                let cx = self.config.origin_x + (c as f64 + 0.5) * s;
                let cy = self.config.origin_y + (r as f64 + 0.5) * s;
                if (cx - x).hypot(cy - y) <= radius {
                    out.push((c, r));
                }
            }
        }
        if let Some(own) = self.config.cell_of(x, y) {
            if !out.contains(&own) {
                out.push(own);
            }
        }
        out
    }

    /// Serializes as a header followed by one `F`/`O`/`U` character per
    /// cell, farthest row first.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "OGRID\nwidth {}\nheight {}\nresolution {}\norigin {} {}\nextent {} {}\nground_threshold {}\n\
             occupancy_threshold {}\nframes {}\nsensor_height {}\n",
            self.columns(),
            self.rows(),
            fmt_f64(c.cell_size),
            fmt_f64(c.origin_x),
            fmt_f64(c.origin_y),
            fmt_f64(c.width),
            fmt_f64(c.depth),
            fmt_f64(c.ground_threshold),
            c.occupancy_threshold,
            c.frames,
            fmt_f64(c.sensor_height),
        );
        for r in (0..self.rows()).rev() {
            out.extend((0..self.columns()).map(|col| self.get(col, r).symbol()));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing {what}")))?;
            Ok((i + 1, l.split_whitespace().map(str::to_string).collect()))
        };
        let (line, magic) = next("header")?;
        if magic != ["OGRID"] {
            return Err(Error::parse(line, "expected `OGRID`"));
        }
        let mut field = |name: &str, arity: usize| -> Result<Vec<f64>> {
            let (line, f) = next(name)?;
            if f.len() != arity + 1 || f[0] != name {
                return Err(Error::parse(line, format!("expected `{name}` with {arity} value(s)")));
            }
            f[1..]
                .iter()
                .map(|v| v.parse().map_err(|_| Error::parse(line, format!("invalid number `{v}`"))))
                .collect()
        };
        let columns = field("width", 1)?[0] as usize;
        let rows = field("height", 1)?[0] as usize;
        let cell_size = field("resolution", 1)?[0];
        let origin = field("origin", 2)?;
        let extent = field("extent", 2)?;
        let ground_threshold = field("ground_threshold", 1)?[0];
        let occupancy_threshold = field("occupancy_threshold", 1)?[0] as u32;
        let frames = field("frames", 1)?[0] as usize;
        let sensor_height = field("sensor_height", 1)?[0];
        let config = GridConfig {
            cell_size,
            origin_x: origin[0],
            origin_y: origin[1],
            width: extent[0],
            depth: extent[1],
            ground_threshold,
            occupancy_threshold,
            frames,
            sensor_height,
        };
        config.validate()?;
        if config.columns() != columns || config.rows() != rows {
            return Err(Error::parse(0, "grid size disagrees with extent / resolution"));
        }
        let mut cells = vec![Cell::Unknown; columns * rows];
        for k in 0..rows {
            let (line, f) = next("grid row")?;
            let row = f.concat();
            if row.len() != columns {
                return Err(Error::parse(line, format!("expected {columns} cells, found {}", row.len())));
            }
            let r = rows - 1 - k;
            for (c, ch) in row.chars().enumerate() {
                cells[r * columns + c] = match ch {
                    'F' => Cell::Free,
                    'O' => Cell::Occupied,
                    'U' => Cell::Unknown,
                    other => return Err(Error::parse(line, format!("invalid cell `{other}`"))),
                };
            }
        }
        Ok(Self { config, cells })
    }
}

impl fmt::Display for OccupancyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Integrates the last `config.frames` clouds. Low points are free
/// evidence; a cell is occupied once it holds `occupancy_threshold` elevated
/// points; cells without evidence stay unknown.
pub fn build_grid(frames: &[PointCloud], config: &GridConfig) -> Result<OccupancyGrid> {
    config.validate()?;
    if frames.is_empty() {
        return Err(Error::InsufficientData("occupancy grid needs at least one frame".into()));
    }
    let n = config.columns() * config.rows();
    let mut free = vec![0u32; n];
    let mut occupied = vec![0u32; n];
    let first = frames.len().saturating_sub(config.frames);
    for cloud in &frames[first..] {
        for p in &cloud.points {
            let Some((c, r)) = config.cell_of(p.position.x, p.position.y) else {
                continue;
            };
            let i = r * config.columns() + c;
            if p.position.z + config.sensor_height <= config.ground_threshold {
                free[i] += 1;
            } else {
                occupied[i] += 1;
            }
        }
    }
    let cells = free
        .iter()
        .zip(&occupied)
        .map(|(&f, &o)| {
            if o >= config.occupancy_threshold {
                Cell::Occupied
            } else if f > 0 || o > 0 {
                Cell::Free
            } else {
                Cell::Unknown
            }
        })
        .collect();
    Ok(OccupancyGrid {
        config: config.clone(),
        cells,
    })
}

/// Occupied cell count times cell area, m^2.
pub fn occupied_area(grid: &OccupancyGrid) -> f64 {
    grid.count(Cell::Occupied) as f64 * grid.config.cell_size * grid.config.cell_size
}
