//! Batch front-end: scanning, injection, fitting, scenarios and occupancy.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mirrorlidar::grid::{build_grid, occupied_area, Cell, GridConfig};
use mirrorlidar::injection::{inject, InjectionConfig, InjectionReport, GENERATOR};
use mirrorlidar::io::write_csv_file;
use mirrorlidar::kv::KeyValues;
use mirrorlidar::lidar::scan;
use mirrorlidar::models::MAX_LATERAL_TILT_DEG;
use mirrorlidar::pipeline::campaign::{per_configuration_fit, process_campaign, samples_for, summarize};
use mirrorlidar::pipeline::fit::{fit_models, FitResult};
use mirrorlidar::pipeline::{CampaignConfig, FrameCampaign, IcpConfig, ModelKind};
use mirrorlidar::scenario::{
    effectiveness_sweep, run, AttackMode, EffectivenessRow, ScenarioConfig, ScenarioLog,
    EFFECTIVENESS_CONFIGS,
};
use mirrorlidar::scene_file::SceneFile;
use mirrorlidar::{ArtifactModelParams, LidarConfig, MirrorState, PointCloud, PointTag};

use manifest::Manifest;

#[derive(Parser)]
#[command(name = "mirrorlidar", version, about = "Mirror-based LiDAR spoofing simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ray-trace a scene file into point-cloud CSV.
    Scan(ScanArgs),
    /// Inject model-driven artifacts into recorded frames.
    Inject(InjectArgs),
    /// Fit the artifact models to a frame campaign.
    Fit(FitArgs),
    /// Run the two-vehicle braking scenario.
    Scenario(ScenarioArgs),
    /// Build an occupancy grid from point-cloud CSV files.
    Occupancy(OccupancyArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// Scene description; omitted means flat ground only.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Lidar settings as key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of frames to emit.
    #[arg(long, default_value_t = 1)]
    frames: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InjectArgs {
    /// Native frames (point-cloud CSV).
    #[arg(long)]
    input: PathBuf,
    /// Mirror state per frame: CSV `frame,d,theta,area`.
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Campaign manifest: CSV `d,theta,area,baseline,attacked`.
    #[arg(long)]
    campaign: PathBuf,
    /// Model to fit; all four when omitted.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Starting values and fixed parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Register attacked frames onto their baselines before differencing.
    #[arg(long)]
    icp: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact model parameters used for injection.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_attack: bool,
    /// Run the mirror-configuration table instead of a single scenario.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OccupancyArgs {
    /// Glob of point-cloud CSV files, read in sorted path order.
    #[arg(long)]
    frames: String,
    /// Grid settings as key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(String),
    NonConvergence(String),
}

impl From<mirrorlidar::Error> for Failure {
    fn from(e: mirrorlidar::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Attaches the offending file to an error message.
fn at<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    at(path, fs::read_to_string(path))
}

fn read_params(path: Option<&Path>, m: &mut Manifest) -> Result<ArtifactModelParams, Failure> {
    match path {
        Some(p) => {
            let text = read_text(p)?;
            m.input("params", p, &text);
            at(p, ArtifactModelParams::parse(&text))
        }
        None => Ok(ArtifactModelParams::default()),
    }
}

fn write(path: &Path, text: &str) -> Outcome {
    at(path, fs::write(path, text))
}

fn cmd_scan(a: &ScanArgs, m: &mut Manifest) -> Outcome {
    let scene = match &a.scene {
        Some(p) => {
            let text = read_text(p)?;
            m.input("scene", p, &text);
            at(p, SceneFile::parse(&text))?
        }
        None => SceneFile::default(),
    };
    let lidar = match &a.config {
        Some(p) => {
            let text = read_text(p)?;
            m.input("config", p, &text);
            at(p, KeyValues::parse(&text).and_then(|kv| LidarConfig::from_kv(&kv)))?
        }
        None => LidarConfig::default(),
    };
    if a.frames == 0 {
        return Err(Failure::Input("--frames must be at least 1".into()));
    }
    m.parameters(&format!("{lidar:?}\n{scene:?}"));
    let cloud = scan(&scene.scene, &scene.pose(&lidar), &lidar)?;
    let frames: Vec<PointCloud> = (0..a.frames)
        .map(|i| PointCloud::new(i, i as f64 / lidar.scan_rate, cloud.points.clone()))
        .collect();
    let out = a.out.join("scan.csv");
    write_csv_file(&out, &frames)?;
    m.output(&out);
    println!(
        "{} points per frame ({} direct, {} ground, {} virtual), {} frames -> {}",
        cloud.len(),
        cloud.count_tag(PointTag::Direct),
        cloud.count_tag(PointTag::Ground),
        cloud.count_tag(PointTag::Virtual),
        a.frames,
        out.display()
    );
    Ok(())
}

/// Reads `frame,d,theta,area` rows. Every state is checked against the
/// offset model's domain before anything runs.
fn read_schedule(path: &Path, text: &str) -> Result<BTreeMap<u64, MirrorState>, Failure> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line == "frame,d,theta,area") {
            continue;
        }
        let bad = |msg: String| Failure::Input(format!("{}: parse error at line {}: {msg}", path.display(), i + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", f.len())));
        }
        let frame: u64 = f[0].parse().map_err(|_| bad(format!("invalid frame `{}`", f[0])))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("invalid number `{s}`")));
        let state = MirrorState::new(num(f[1])?, num(f[2])?, num(f[3])?).map_err(|e| bad(e.to_string()))?;
        if state.theta_deg >= MAX_LATERAL_TILT_DEG {
            return Err(bad(format!(
                "tilt {}° is outside the lateral-offset model, which is only defined below {}° \
                 (tan 2θ diverges at 45°); use ray tracing for steeper mirrors",
                state.theta_deg, MAX_LATERAL_TILT_DEG
            )));
        }
        if out.insert(frame, state).is_some() {
            return Err(bad(format!("frame {frame} scheduled twice")));
        }
    }
    Ok(out)
}

fn cmd_inject(a: &InjectArgs, m: &mut Manifest) -> Outcome {
    let params = read_params(a.params.as_deref(), m)?;
    let schedule_text = read_text(&a.schedule)?;
    m.input("schedule", &a.schedule, &schedule_text);
    let schedule = read_schedule(&a.schedule, &schedule_text)?;
    let input_text = read_text(&a.input)?;
    m.input("input", &a.input, &input_text);
    let frames = at(&a.input, mirrorlidar::io::read_csv(input_text.as_bytes()))?;
    let missing: Vec<u64> = frames.iter().map(|f| f.frame).filter(|f| !schedule.contains_key(f)).collect();
    if !missing.is_empty() {
        return Err(Failure::Input(format!(
            "{}: no mirror state for frame(s) {missing:?}",
            a.schedule.display()
        )));
    }
    let config = InjectionConfig {
        params,
        seed: a.seed,
        ..InjectionConfig::default()
    };
    m.seed(a.seed);
    m.parameters(&format!("{config:?}"));
    let mut rng = config.rng();
    let mut attacked = Vec::with_capacity(frames.len());
    let mut report = format!("{}\n", InjectionReport::CSV_HEADER);
    let mut triggered = 0;
    for f in &frames {
        let (cloud, r) = inject(f, &schedule[&f.frame], &config, &mut rng)?;
        if let Some(w) = &r.warning {
            eprintln!("frame {}: {w}", f.frame);
        }
        triggered += usize::from(r.triggered);
        report.push_str(&r.csv_row());
        report.push('\n');
        attacked.push(cloud);
    }
    let out_csv = a.out.join("attacked.csv");
    let out_report = a.out.join("report.csv");
    write_csv_file(&out_csv, &attacked)?;
    write(&out_report, &report)?;
    m.output(&out_csv);
    m.output(&out_report);
    println!("{triggered} of {} frames triggered ({GENERATOR}, seed {})", frames.len(), a.seed);
    Ok(())
}

fn fit_rows(fit: &FitResult) -> String {
    let r2 = fit.r_squared.map_or_else(|| "none".to_string(), |v| v.to_string());
    fit.names()
        .iter()
        .zip(&fit.values)
        .map(|(n, v)| {
            format!(
                "{},{n},{v},{r2},{},{},{},{}\n",
                fit.model, fit.rmse, fit.iterations, fit.converged, fit.samples
            )
        })
        .collect()
}

fn cmd_fit(a: &FitArgs, m: &mut Manifest) -> Outcome {
    let mut params = read_params(a.params.as_deref(), m)?;
    let initial = params;
    let manifest_text = read_text(&a.campaign)?;
    m.input("campaign", &a.campaign, &manifest_text);
    let campaign = FrameCampaign::load(&a.campaign).map_err(|e| Failure::Input(format!("{}: {e}", a.campaign.display())))?;
    if campaign.frames.is_empty() {
        return Err(Failure::Input(format!("{}: campaign has no frames", a.campaign.display())));
    }
    let config = CampaignConfig {
        // ground returns below about 20 cm are left out of the registration
        icp: a.icp.then(|| IcpConfig {
            min_z: Some(0.2 - LidarConfig::default().mount_height),
            ..IcpConfig::default()
        }),
        ..CampaignConfig::default()
    };
    m.parameters(&format!("{config:?}\n{initial:?}\n{:?}", a.model));
    let outcomes = process_campaign(&campaign, &config)?;
    let summaries = summarize(&outcomes);

    let mut states = String::from("d,theta,area,frames,appeared,R,X,N,P\n");
    for s in &summaries {
        let f = &s.features;
        states.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.state.d, s.state.theta_deg, s.state.area, s.frames, s.appeared, f.r_artifact, f.x_artifact, f.n_artifact, f.p_app
        ));
    }

    let models: Vec<ModelKind> = a.model.map_or_else(|| ModelKind::ALL.to_vec(), |k| vec![k]);
    let mut fits = String::from("model,parameter,value,r_squared,rmse,iterations,converged,samples\n");
    let mut configs = String::from("model,theta,area,samples,r_squared,rmse\n");
    let mut problems = Vec::new();
    for &model in &models {
        let samples = samples_for(&summaries, model);
        let fit = match fit_models(&samples, model, a.params.as_ref().map(|_| &initial)) {
            Ok(f) => f,
            Err(e) => {
                problems.push(format!("{model}: {e}"));
                continue;
            }
        };
        if !fit.converged {
            problems.push(format!("{model}: {}", fit.diagnostic.clone().unwrap_or_else(|| "did not converge".into())));
        }
        fit.apply(&mut params);
        fits.push_str(&fit_rows(&fit));
        for c in per_configuration_fit(&samples, model, &params) {
            let r2 = c.r_squared.map_or_else(|| "none".to_string(), |v| v.to_string());
            configs.push_str(&format!("{model},{},{},{},{r2},{}\n", c.theta_deg, c.area, c.samples, c.rmse));
        }
        let r2 = fit.r_squared.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        println!("{model}: R² {r2}, RMSE {:.4}, {} samples, {} iterations", fit.rmse, fit.samples, fit.iterations);
    }
    for (name, text) in [
        ("params.txt", params.to_text()),
        ("fit.csv", fits),
        ("configurations.csv", configs),
        ("states.csv", states),
    ] {
        let path = a.out.join(name);
        write(&path, &text)?;
        m.output(&path);
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::NonConvergence(problems.join("\n")))
    }
}

fn cmd_scenario(a: &ScenarioArgs, m: &mut Manifest) -> Outcome {
    let mut config = match &a.config {
        Some(p) => {
            let text = read_text(p)?;
            m.input("config", p, &text);
            at(p, ScenarioConfig::parse(&text))?
        }
        None => ScenarioConfig::default(),
    };
    if a.params.is_some() {
        config.params = read_params(a.params.as_deref(), m)?;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.no_attack {
        config.attack = AttackMode::Disabled;
    }
    config.validate()?;
    m.seed(config.seed);
    m.parameters(&config.to_text());
    let effective = a.out.join("scenario.cfg");
    write(&effective, &config.to_text())?;
    m.output(&effective);

    if a.sweep {
        let states: Vec<MirrorState> = EFFECTIVENESS_CONFIGS
            .iter()
            .map(|&(d, t, a)| MirrorState::new(d, t, a))
            .collect::<Result<_, _>>()?;
        let rows = effectiveness_sweep(&config, &states)?;
        let mut text = format!("{}\n", EffectivenessRow::CSV_HEADER);
        for r in &rows {
            text.push_str(&r.csv_row());
            text.push('\n');
        }
        let path = a.out.join("effectiveness.csv");
        write(&path, &text)?;
        m.output(&path);
        print!("{text}");
        return Ok(());
    }

    let log: ScenarioLog = run(&config)?;
    let log_path = a.out.join("log.csv");
    let summary_path = a.out.join("summary.txt");
    write(&log_path, &log.to_csv())?;
    write(&summary_path, &log.summary.to_text())?;
    m.output(&log_path);
    m.output(&summary_path);
    print!("{}", log.summary.to_text());
    Ok(())
}

fn cmd_occupancy(a: &OccupancyArgs, m: &mut Manifest) -> Outcome {
    let config = match &a.config {
        Some(p) => {
            let text = read_text(p)?;
            m.input("config", p, &text);
            at(p, GridConfig::parse(&text))?
        }
        None => GridConfig::default(),
    };
    let mut paths: Vec<PathBuf> = glob::glob(&a.frames)
        .map_err(|e| Failure::Input(format!("invalid --frames pattern: {e}")))?
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Input(e.to_string()))?;
    paths.sort();
    let mut frames = Vec::new();
    for p in &paths {
        let text = read_text(p)?;
        m.input("frames", p, &text);
        frames.extend(at(p, mirrorlidar::io::read_csv(text.as_bytes()))?);
    }
    if frames.is_empty() {
        return Err(Failure::Input(format!("no frames match `{}`", a.frames)));
    }
    m.parameters(&format!("{config:?}"));
    let grid = build_grid(&frames, &config)?;
    let area = occupied_area(&grid);
    let summary = format!(
        "files={}\nframes={}\nframes_used={}\noccupied_cells={}\nfree_cells={}\nunknown_cells={}\noccupied_area={area}\n",
        paths.len(),
        frames.len(),
        frames.len().min(config.frames),
        grid.count(Cell::Occupied),
        grid.count(Cell::Free),
        grid.count(Cell::Unknown),
    );
    let grid_path = a.out.join("grid.txt");
    let summary_path = a.out.join("occupancy.txt");
    write(&grid_path, &grid.to_text())?;
    write(&summary_path, &summary)?;
    m.output(&grid_path);
    m.output(&summary_path);
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, out) = match &cli.command {
        Command::Scan(a) => ("scan", &a.out),
        Command::Inject(a) => ("inject", &a.out),
        Command::Fit(a) => ("fit", &a.out),
        Command::Scenario(a) => ("scenario", &a.out),
        Command::Occupancy(a) => ("occupancy", &a.out),
    };
    let mut manifest = Manifest::new(name, out);
    let result = fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display()))).and_then(|_| {
        match &cli.command {
            Command::Scan(a) => cmd_scan(a, &mut manifest),
            Command::Inject(a) => cmd_inject(a, &mut manifest),
            Command::Fit(a) => cmd_fit(a, &mut manifest),
            Command::Scenario(a) => cmd_scenario(a, &mut manifest),
            Command::Occupancy(a) => cmd_occupancy(a, &mut manifest),
        }
    });
    // a non-converged fit still leaves its outputs and manifest behind
    if matches!(result, Ok(()) | Err(Failure::NonConvergence(_))) {
        if let Err(e) = manifest.write() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NonConvergence(msg)) => {
            eprintln!("fit did not converge:\n{msg}");
            ExitCode::from(3)
        }
    }
}
