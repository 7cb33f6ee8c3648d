//! Artifact segmentation, feature extraction and model fitting.

pub mod campaign;
pub mod fit;
pub mod icp;
pub mod segment;
pub mod spatial;
pub mod synthetic;

pub use campaign::{CampaignConfig, CampaignFrame, FrameCampaign, FrameOutcome};
pub use fit::{fit_models, FitResult, ModelKind};
pub use icp::{icp_align, IcpConfig, IcpResult, RigidTransform};
pub use segment::{cluster, extract_features, frame_difference, SegmentConfig};
