//! Simulation and analysis of mirror-based LiDAR spoofing.
//!
//! * [`optics`]: reflection, ray/scene intersection and folded two-hop paths.
//! * [`lidar`]: ray-cast scans with data omission and fabrication.
//! * [`models`]: empirical artifact models over the mirror state `(d, θ, A)`.
//! * [`injection`]: model-driven phantom injection into native scans.
//! * [`pipeline`]: registration, differencing, clustering and model fitting.
//! * [`scenario`]: two-vehicle emergency-braking scenario.
//! * [`grid`]: 2-D occupancy mapping.

pub mod error;
pub mod grid;
pub mod injection;
pub mod io;
pub mod kv;
pub mod lidar;
pub mod models;
pub mod optics;
pub mod pipeline;
pub mod scenario;
pub mod scene_file;
pub mod scenes;

pub use error::{Error, Result};
pub use lidar::{LidarConfig, LidarPoint, PointCloud, PointTag, SensorPose};
pub use models::{ArtifactFeatures, ArtifactModelParams, MirrorState};
pub use optics::{MirrorPanel, Scene, SolidObstacle, Vec3};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
