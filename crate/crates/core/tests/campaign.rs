use mirrorlidar::injection::{convert_to_3d, inject, InjectionConfig};
use mirrorlidar::io::write_csv_file;
use mirrorlidar::lidar::scan;
use mirrorlidar::models::{point_count, predict_features};
use mirrorlidar::optics::{Scene, SolidObstacle};
use mirrorlidar::pipeline::campaign::{process_campaign, samples_for, summarize, MANIFEST_HEADER};
use mirrorlidar::pipeline::icp::{icp_align, IcpConfig, RigidTransform};
use mirrorlidar::pipeline::{CampaignConfig, FrameCampaign, ModelKind};
use mirrorlidar::scenes::OaaLayout;
use mirrorlidar::{LidarConfig, MirrorState, PointCloud, SensorPose, Vec3};

/// Sensor-frame height separating ground returns from structure, m.
const GROUND_CUT: f64 = -2.0;

fn lidar() -> LidarConfig {
    LidarConfig {
        channels: 32,
        ..LidarConfig::default()
    }
}

/// Ground, a roadside wall and two cones: enough structure to pin down all
/// three planar degrees of freedom for registration.
fn baseline() -> PointCloud {
    let mut scene = Scene::flat_ground();
    scene.solids.push(OaaLayout::default().wall());
    scene.solids.push(SolidObstacle::traffic_cone(Vec3::new(-2.0, 9.0, 0.0)));
    scene.solids.push(SolidObstacle::traffic_cone(Vec3::new(1.5, 14.0, 0.0)));
    let cfg = lidar();
    scan(&scene, &SensorPose::at(0.0, 0.0, &cfg), &cfg).unwrap()
}

/// Writes one baseline/attacked file pair per state with `frames` seeds each.
fn write_campaign(
    dir: &std::path::Path,
    states: &[MirrorState],
    frames: u64,
    misalign: Option<RigidTransform>,
) -> std::path::PathBuf {
    let base = baseline();
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    for (i, s) in states.iter().enumerate() {
        let mut b = Vec::new();
        let mut a = Vec::new();
        for f in 0..frames {
            let cfg = InjectionConfig {
                seed: 1000 * i as u64 + f,
                ..InjectionConfig::default()
            };
            let mut frame = base.clone();
            frame.frame = f;
            let (att, _) = inject(&frame, s, &cfg, &mut cfg.rng()).unwrap();
            b.push(frame);
            a.push(match misalign {
                Some(t) => t.transform_cloud(&att),
                None => att,
            });
        }
        write_csv_file(&dir.join(format!("b{i}.csv")), &b).unwrap();
        write_csv_file(&dir.join(format!("a{i}.csv")), &a).unwrap();
        manifest.push_str(&format!("{},{},{},b{i}.csv,a{i}.csv\n", s.d, s.theta_deg, s.area));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

fn states() -> Vec<MirrorState> {
    [(1.0, 22.0, 0.18), (1.8, 22.0, 0.18), (2.4, 22.0, 0.18), (3.0, 22.0, 0.18)]
        .iter()
        .map(|&(d, t, a)| MirrorState::new(d, t, a).unwrap())
        .collect()
}

#[test]
fn injected_artifacts_are_recovered_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let states = states();
    let manifest = write_campaign(dir.path(), &states, 10, None);
    let campaign = FrameCampaign::load(&manifest).unwrap();
    assert_eq!(campaign.frames.len(), 40);
    let outcomes = process_campaign(&campaign, &CampaignConfig::default()).unwrap();
    let summaries = summarize(&outcomes);
    assert_eq!(summaries.len(), states.len());
    let inj = InjectionConfig::default();
    for s in &summaries {
        let (model, _) = predict_features(&s.state, &inj.params).unwrap();
        let p = model.p_app;
        let se = (p * (1.0 - p) / 10.0).sqrt();
        assert!(
            (s.features.p_app - p).abs() <= 3.0 * se + 0.05 + 1e-12,
            "{:?}: {} vs {p}",
            s.state,
            s.features.p_app
        );
        if s.appeared == 0 {
            continue;
        }
        // known centroid: sampling error of the mean is ~0.25/sqrt(N)
        let c = convert_to_3d(model.r_artifact, model.x_artifact, &inj).unwrap();
        let n = point_count(&s.state, &inj.params) as f64;
        let tol = 4.0 * 0.25 / n.sqrt();
        assert!((s.features.r_artifact - c.norm()).abs() < tol, "{:?}", s);
        assert!((s.features.x_artifact - c.x).abs() < tol, "{:?}", s);
        // stray tail points can fall off the cluster
        assert!(s.features.n_artifact <= n && s.features.n_artifact >= 0.97 * n, "{:?} vs {n}", s);
    }
    let radial = samples_for(&summaries, ModelKind::Radial);
    assert_eq!(radial.len(), summaries.iter().filter(|s| s.appeared > 0).count());
    assert_eq!(samples_for(&summaries, ModelKind::Window).len(), summaries.len());
}

#[test]
fn registration_undoes_a_small_pose_error() {
    let t = RigidTransform::from_yaw(0.6f64.to_radians(), Vec3::new(0.04, -0.06, 0.0));
    let base = baseline();
    let moved = t.transform_cloud(&base);
    let cfg = IcpConfig {
        trim_fraction: 0.0,
        min_z: Some(GROUND_CUT),
        ..IcpConfig::default()
    };
    let result = icp_align(&moved, &base, &cfg).unwrap();
    assert!(result.residual < 1e-6, "{}", result.residual);
    let back = result.transform.compose(&t);
    assert!((back.translation).norm() < 1e-5);
    assert!(back.angle().abs() < 1e-6);
}

#[test]
fn misaligned_campaign_needs_registration() {
    let dir = tempfile::tempdir().unwrap();
    let states = &states()[1..3];
    let t = RigidTransform::from_yaw(0.5f64.to_radians(), Vec3::new(0.05, 0.05, 0.0));
    let manifest = write_campaign(dir.path(), states, 4, Some(t));
    let campaign = FrameCampaign::load(&manifest).unwrap();
    let inj = InjectionConfig::default();

    let registered = CampaignConfig {
        icp: Some(IcpConfig {
            min_z: Some(GROUND_CUT),
            ..IcpConfig::default()
        }),
        ..CampaignConfig::default()
    };
    for o in process_campaign(&campaign, &registered).unwrap() {
        let Some(f) = o.features else { continue };
        let n = point_count(&o.state, &inj.params) as f64;
        assert!(f.n_artifact >= 0.95 * n && f.n_artifact <= n, "{f:?} vs {n}");
        let (m, _) = predict_features(&o.state, &inj.params).unwrap();
        let c = convert_to_3d(m.r_artifact, m.x_artifact, &inj).unwrap();
        assert!((f.r_artifact - c.norm()).abs() < 0.1, "{f:?}");
    }

    // without registration the pose error itself shows up as a change
    let raw = process_campaign(&campaign, &CampaignConfig::default()).unwrap();
    let largest = raw.iter().filter_map(|o| o.features).map(|f| f.n_artifact).fold(0.0, f64::max);
    let n_max = states.iter().map(|s| point_count(s, &inj.params)).max().unwrap() as f64;
    assert!(largest > n_max, "{largest} vs {n_max}");
}

#[test]
fn ground_only_registration_stalls() {
    // the rings of ground returns are why the height cut exists
    let t = RigidTransform::from_yaw(0.6f64.to_radians(), Vec3::new(0.04, -0.06, 0.0));
    let base = baseline();
    let result = icp_align(&t.transform_cloud(&base), &base, &IcpConfig::default()).unwrap();
    assert!(result.transform.compose(&t).angle().abs() > 1e-3);
}

#[test]
fn mismatched_frame_counts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let base = baseline();
    let mut second = base.clone();
    second.frame += 1;
    write_csv_file(&dir.path().join("b.csv"), &[base.clone(), second]).unwrap();
    write_csv_file(&dir.path().join("a.csv"), &[base]).unwrap();
    let m = dir.path().join("m.csv");
    std::fs::write(&m, format!("{MANIFEST_HEADER}\n2,20,0.3,b.csv,a.csv\n")).unwrap();
    assert!(FrameCampaign::load(&m).is_err());
}
