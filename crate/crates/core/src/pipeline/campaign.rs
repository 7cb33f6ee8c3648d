//! Frame campaigns: paired baseline/attacked scans turned into per-state
//! feature samples ready for fitting.
//!
//! Manifest format (CSV, paths relative to the manifest):
//!
//! ```text
//! d,theta,area,baseline,attacked
//! 2.0,20,0.36,base_000.csv,att_000.csv
//! ```
//!
//! Each row pairs every frame of `baseline` with the frame at the same index
//! of `attacked`; all of them share the row's mirror state.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::fit::{goodness_of_fit, ModelKind};
use super::icp::{icp_align, IcpConfig};
use super::segment::{cluster, extract_features, frame_difference, SegmentConfig};
use crate::error::{Error, Result};
use crate::io::read_csv_file;
use crate::lidar::PointCloud;
use crate::models::{ArtifactFeatures, ArtifactModelParams, MirrorState};

pub const MANIFEST_HEADER: &str = "d,theta,area,baseline,attacked";

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignFrame {
    pub state: MirrorState,
    pub baseline: PointCloud,
    pub attacked: PointCloud,
}

/// Index-aligned baseline/attacked frame pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameCampaign {
    pub frames: Vec<CampaignFrame>,
}

/// One manifest row before the clouds are loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub state: MirrorState,
    pub baseline: PathBuf,
    pub attacked: PathBuf,
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (rows.is_empty() && line == MANIFEST_HEADER) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::parse(line_no, format!("expected 5 fields, found {}", f.len())));
        }
        let num = |idx: usize| -> Result<f64> {
            f[idx]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid number `{}`", f[idx])))
        };
        let state = MirrorState::new(num(0)?, num(1)?, num(2)?)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        rows.push(ManifestRow {
            state,
            baseline: base_dir.join(f[3]),
            attacked: base_dir.join(f[4]),
        });
    }
    Ok(rows)
}

impl FrameCampaign {
    pub fn load(manifest: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest)?;
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let mut frames = Vec::new();
        for row in parse_manifest(&text, dir)? {
            let baseline = read_csv_file(&row.baseline)?;
            let attacked = read_csv_file(&row.attacked)?;
            if baseline.len() != attacked.len() {
                return Err(Error::contract(format!(
                    "{} has {} frames but {} has {}",
                    row.baseline.display(),
                    baseline.len(),
                    row.attacked.display(),
                    attacked.len()
                )));
            }
            frames.extend(baseline.into_iter().zip(attacked).map(|(b, a)| CampaignFrame {
                state: row.state,
                baseline: b,
                attacked: a,
            }));
        }
        Ok(Self { frames })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CampaignConfig {
    /// Register attacked frames onto their baselines first; `None` trusts the poses.
    pub icp: Option<IcpConfig>,
    pub segment: SegmentConfig,
}

/// Largest differenced cluster of one frame, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub state: MirrorState,
    pub features: Option<ArtifactFeatures>,
}

pub fn process_frame(frame: &CampaignFrame, config: &CampaignConfig) -> Result<FrameOutcome> {
    let attacked = match &config.icp {
        Some(icp) if frame.attacked.len() >= 3 && frame.baseline.len() >= 3 => {
            let reg = icp_align(&frame.attacked, &frame.baseline, icp)?;
            reg.transform.transform_cloud(&frame.attacked)
        }
        _ => frame.attacked.clone(),
    };
    let diff = frame_difference(&attacked, &frame.baseline, config.segment.difference_radius);
    let clusters = cluster(&diff, config.segment.cluster_radius, config.segment.min_cluster_points);
    // ties go to the first cluster, which keeps the choice deterministic
    let largest = clusters
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .map(|(_, c)| c);
    Ok(FrameOutcome {
        state: frame.state,
        features: largest.map(extract_features).transpose()?,
    })
}

/// Processes all frames in parallel; outcomes keep the campaign order.
pub fn process_campaign(campaign: &FrameCampaign, config: &CampaignConfig) -> Result<Vec<FrameOutcome>> {
    campaign
        .frames
        .par_iter()
        .map(|f| process_frame(f, config))
        .collect()
}

/// Per-state averages. `p_app` is the fraction of frames in which an
/// artifact appeared; the geometric features average over those frames only
/// and are zero when it never appeared.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSummary {
    pub state: MirrorState,
    pub frames: usize,
    pub appeared: usize,
    pub features: ArtifactFeatures,
}

pub fn summarize(outcomes: &[FrameOutcome]) -> Vec<StateSummary> {
    let key = |s: &MirrorState| (s.d.to_bits(), s.theta_deg.to_bits(), s.area.to_bits());
    let mut order = Vec::new();
    let mut acc: BTreeMap<(u64, u64, u64), (MirrorState, usize, usize, [f64; 3])> = BTreeMap::new();
    for o in outcomes {
        let k = key(&o.state);
        let e = acc.entry(k).or_insert_with(|| {
            order.push(k);
            (o.state, 0, 0, [0.0; 3])
        });
        e.1 += 1;
        if let Some(f) = &o.features {
            e.2 += 1;
            e.3[0] += f.r_artifact;
            e.3[1] += f.x_artifact;
            e.3[2] += f.n_artifact;
        }
    }
    order
        .into_iter()
        .map(|k| {
            let (state, frames, appeared, sums) = acc[&k];
            let m = appeared.max(1) as f64;
            StateSummary {
                state,
                frames,
                appeared,
                features: ArtifactFeatures {
                    r_artifact: sums[0] / m,
                    x_artifact: sums[1] / m,
                    n_artifact: sums[2] / m,
                    p_app: appeared as f64 / frames as f64,
                },
            }
        })
        .collect()
}

/// Fit inputs for `model`. The window model uses every state; the others
/// only states where the artifact appeared at least once.
pub fn samples_for(summaries: &[StateSummary], model: ModelKind) -> Vec<(MirrorState, ArtifactFeatures)> {
    summaries
        .iter()
        .filter(|s| model == ModelKind::Window || s.appeared > 0)
        .map(|s| (s.state, s.features))
        .collect()
}

/// Goodness of fit within each `(θ, A)` configuration, in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationFit {
    pub theta_deg: f64,
    pub area: f64,
    pub samples: usize,
    pub r_squared: Option<f64>,
    pub rmse: f64,
}

pub fn per_configuration_fit(
    samples: &[(MirrorState, ArtifactFeatures)],
    model: ModelKind,
    params: &ArtifactModelParams,
) -> Vec<ConfigurationFit> {
    let mut order: Vec<(u64, u64)> = Vec::new();
    let mut groups: BTreeMap<(u64, u64), Vec<(MirrorState, ArtifactFeatures)>> = BTreeMap::new();
    for s in samples {
        let k = (s.0.theta_deg.to_bits(), s.0.area.to_bits());
        groups
            .entry(k)
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(*s);
    }
    order
        .into_iter()
        .map(|k| {
            let g = &groups[&k];
            let (r_squared, rmse) = goodness_of_fit(g, model, params);
            ConfigurationFit {
                theta_deg: f64::from_bits(k.0),
                area: f64::from_bits(k.1),
                samples: g.len(),
                r_squared,
                rmse,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_rows_resolve_relative_paths() {
        let text = "d,theta,area,baseline,attacked\n2,20,0.36,b.csv,sub/a.csv\n";
        let rows = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].attacked, Path::new("/data/sub/a.csv"));
        assert_eq!(rows[0].state.theta_deg, 20.0);
    }

    #[test]
    fn manifest_errors_carry_line_numbers() {
        let err = parse_manifest("d,theta,area,baseline,attacked\n2,x,0.3,a,b\n", Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_manifest("1,2,3\n", Path::new(".")).is_err());
    }

    #[test]
    fn summary_frequencies() {
        let s = MirrorState::new(2.0, 10.0, 0.2).unwrap();
        let f = ArtifactFeatures {
            r_artifact: 2.0,
            x_artifact: 0.4,
            n_artifact: 30.0,
            p_app: 1.0,
        };
        let outcomes = vec![
            FrameOutcome { state: s, features: Some(f) },
            FrameOutcome { state: s, features: None },
            FrameOutcome { state: s, features: None },
            FrameOutcome { state: s, features: Some(f) },
        ];
        let sum = summarize(&outcomes);
        assert_eq!(sum.len(), 1);
        assert_eq!(sum[0].features.p_app, 0.5);
        assert_eq!(sum[0].features.n_artifact, 30.0);
    }
}
