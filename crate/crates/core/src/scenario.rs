//! Longitudinal two-vehicle scenario: an ego vehicle approaching a mirror
//! brakes for a phantom obstacle and a follower rear-ends it.
//!
//! Both vehicles drive along +y. Positions are the ego's rear bumper and the
//! follower's front bumper, so the gap is their difference.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::injection::{extract_state, inject, InjectionConfig};
use crate::io::fmt_sig9;
use crate::kv::{fmt_f64, KeyValues};
use crate::lidar::{scan, LidarConfig, PointCloud, PointTag, SensorPose};
use crate::models::{ArtifactModelParams, MirrorState, MAX_LATERAL_TILT_DEG};
use crate::optics::{Scene, Vec3};
use crate::pipeline::segment::{centroid, cluster_indices};
use crate::scenes::OaaLayout;

/// Time to collision of a follower closing on the vehicle ahead; infinite
/// when not closing.
pub fn ttc(gap: f64, v_lead: f64, v_follower: f64) -> f64 {
    let closing = v_follower - v_lead;
    if closing > 0.0 {
        gap.max(0.0) / closing
    } else {
        f64::INFINITY
    }
}

/// Closed-form outcome for both vehicles starting at `speed`, the lead
/// braking at `t = 0` and the follower after `reaction`. Exact when the
/// follower decelerates no harder than the lead, because the gap then
/// shrinks until the follower stops.
pub fn stopping_distance_collides(speed: f64, gap: f64, lead_decel: f64, follower_decel: f64, reaction: f64) -> bool {
    let follower = speed * reaction + speed * speed / (2.0 * follower_decel);
    let lead = speed * speed / (2.0 * lead_decel);
    follower > gap + lead
}

/// Where the attack artifacts come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    /// Empirical-model injection into a native scan.
    Model,
    /// Full ray tracing of a mirror panel and a roadside wall.
    RayTraced,
    Disabled,
}

impl AttackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackMode::Model => "model",
            AttackMode::RayTraced => "raytraced",
            AttackMode::Disabled => "disabled",
        }
    }
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "model" => Ok(AttackMode::Model),
            "raytraced" => Ok(AttackMode::RayTraced),
            "disabled" => Ok(AttackMode::Disabled),
            other => Err(format!("unknown attack mode `{other}`")),
        }
    }
}

/// How the mirror state evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorPlacement {
    /// A panel standing at a fixed route position; `(d, θ)` follow from
    /// the ego pose every tick.
    Route,
    /// A constant state `(mirror_d, mirror_theta, mirror_area)` held relative
    /// to the ego from `attack_start` on.
    Fixed,
}

impl MirrorPlacement {
    pub fn as_str(self) -> &'static str {
        match self {
            MirrorPlacement::Route => "route",
            MirrorPlacement::Fixed => "fixed",
        }
    }
}

impl FromStr for MirrorPlacement {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "route" => Ok(MirrorPlacement::Route),
            "fixed" => Ok(MirrorPlacement::Fixed),
            other => Err(format!("unknown mirror placement `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Simulation step, s.
    pub tick: f64,
    pub ego_speed_kmh: f64,
    pub follower_speed_kmh: f64,
    /// Initial bumper-to-bumper gap, m.
    pub gap: f64,
    /// Ego emergency deceleration, m/s^2.
    pub ego_decel: f64,
    pub follower_decel: f64,
    /// Delay between the follower noticing hard braking and braking itself, s.
    pub follower_reaction: f64,
    /// Ego deceleration the follower notices, m/s^2.
    pub follower_trigger_decel: f64,
    pub min_cluster_points: usize,
    pub cluster_radius: f64,
    pub corridor_half_width: f64,
    pub lookahead: f64,
    /// Returns lower than this above the ground are ignored by perception, m.
    pub obstacle_min_height: f64,
    pub attack: AttackMode,
    pub placement: MirrorPlacement,
    /// Route position of the panel center (route placement), m.
    pub mirror_s: f64,
    pub mirror_lateral: f64,
    pub mirror_height: f64,
    /// Sensor-to-mirror distance (fixed placement), m.
    pub mirror_d: f64,
    /// Panel yaw away from facing the ego, degrees.
    pub mirror_theta: f64,
    pub mirror_area: f64,
    pub mirror_panel_height: f64,
    /// Lateral position of the roadside wall the panel reflects onto, m.
    pub wall_offset: f64,
    /// Start of a fixed-placement attack, s.
    pub attack_start: f64,
    pub max_time: f64,
    /// Simulated time kept after a collision, s.
    pub post_collision: f64,
    pub seed: u64,
    pub lidar_channels: usize,
    pub lidar_azimuth_step: f64,
    pub params: ArtifactModelParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            tick: 0.05,
            ego_speed_kmh: 25.0,
            follower_speed_kmh: 25.0,
            gap: 8.0,
            ego_decel: 8.0,
            follower_decel: 6.0,
            follower_reaction: 1.2,
            follower_trigger_decel: 2.0,
            min_cluster_points: 15,
            cluster_radius: 0.5,
            corridor_half_width: 2.0,
            lookahead: 15.0,
            obstacle_min_height: 0.3,
            attack: AttackMode::Model,
            placement: MirrorPlacement::Route,
            mirror_s: 80.0,
            mirror_lateral: 0.0,
            mirror_height: 1.6,
            mirror_d: 4.0,
            mirror_theta: 10.0,
            mirror_area: 0.6,
            mirror_panel_height: 0.6,
            wall_offset: 4.0,
            attack_start: 11.0,
            max_time: 30.0,
            post_collision: 2.0,
            seed: 0,
            lidar_channels: 64,
            lidar_azimuth_step: 360.0 / 512.0,
            params: ArtifactModelParams::default(),
        }
    }
}

macro_rules! scenario_keys {
    ($($key:literal => $field:ident),* $(,)?) => {
        impl ScenarioConfig {
            /// Accepted configuration keys.
            pub const KEYS: &'static [&'static str] = &[$($key,)* "attack", "mirror_placement"];

            fn read_fields(&mut self, kv: &KeyValues) -> Result<()> {
                $(kv.set($key, &mut self.$field)?;)*
                Ok(())
            }

            fn write_fields(&self, out: &mut String) {
                $(out.push_str(&format!("{}={}\n", $key, self.$field.to_kv()));)*
            }
        }
    };
}

trait ToKv {
    fn to_kv(&self) -> String;
}
impl ToKv for f64 {
    fn to_kv(&self) -> String {
        fmt_f64(*self)
    }
}
impl ToKv for usize {
    fn to_kv(&self) -> String {
        self.to_string()
    }
}
impl ToKv for u64 {
    fn to_kv(&self) -> String {
        self.to_string()
    }
}

scenario_keys! {
    "tick" => tick,
    "ego_speed_kmh" => ego_speed_kmh,
    "follower_speed_kmh" => follower_speed_kmh,
    "gap" => gap,
    "ego_decel" => ego_decel,
    "follower_decel" => follower_decel,
    "follower_reaction" => follower_reaction,
    "follower_trigger_decel" => follower_trigger_decel,
    "min_cluster_points" => min_cluster_points,
    "cluster_radius" => cluster_radius,
    "corridor_half_width" => corridor_half_width,
    "lookahead" => lookahead,
    "obstacle_min_height" => obstacle_min_height,
    "mirror_s" => mirror_s,
    "mirror_lateral" => mirror_lateral,
    "mirror_height" => mirror_height,
    "mirror_d" => mirror_d,
    "mirror_theta" => mirror_theta,
    "mirror_area" => mirror_area,
    "mirror_panel_height" => mirror_panel_height,
    "wall_offset" => wall_offset,
    "attack_start" => attack_start,
    "max_time" => max_time,
    "post_collision" => post_collision,
    "seed" => seed,
    "lidar_channels" => lidar_channels,
    "lidar_azimuth_step" => lidar_azimuth_step,
}

impl ScenarioConfig {
    /// Parses `key=value` overrides of the defaults. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(Self::KEYS)?;
        let mut c = Self::default();
        c.read_fields(&kv)?;
        if let Some(mode) = kv.get::<String>("attack")? {
            c.attack = mode.parse().map_err(|e| Error::parse(kv.line_of("attack"), e))?;
        }
        if let Some(p) = kv.get::<String>("mirror_placement")? {
            c.placement = p
                .parse()
                .map_err(|e| Error::parse(kv.line_of("mirror_placement"), e))?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Every field as `key=value` text that [`Self::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_fields(&mut out);
        out.push_str(&format!("attack={}\n", self.attack));
        out.push_str(&format!("mirror_placement={}\n", self.placement.as_str()));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tick", self.tick),
            ("gap", self.gap),
            ("ego_decel", self.ego_decel),
            ("follower_decel", self.follower_decel),
            ("cluster_radius", self.cluster_radius),
            ("corridor_half_width", self.corridor_half_width),
            ("lookahead", self.lookahead),
            ("max_time", self.max_time),
            ("mirror_area", self.mirror_area),
            ("mirror_panel_height", self.mirror_panel_height),
            ("mirror_d", self.mirror_d),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::contract(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("ego_speed_kmh", self.ego_speed_kmh),
            ("follower_speed_kmh", self.follower_speed_kmh),
            ("follower_reaction", self.follower_reaction),
            ("follower_trigger_decel", self.follower_trigger_decel),
            ("post_collision", self.post_collision),
            ("attack_start", self.attack_start),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::contract(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..90.0).contains(&self.mirror_theta) {
            return Err(Error::contract("mirror_theta must lie in [0, 90) degrees"));
        }
        if self.attack == AttackMode::Model
            && self.placement == MirrorPlacement::Fixed
            && self.mirror_theta >= MAX_LATERAL_TILT_DEG
        {
            return Err(Error::Domain(format!(
                "model injection needs mirror_theta below {MAX_LATERAL_TILT_DEG}°, got {}°; \
                 use attack=raytraced",
                self.mirror_theta
            )));
        }
        self.lidar().validate()?;
        self.params.validate()
    }

    pub fn lidar(&self) -> LidarConfig {
        LidarConfig {
            channels: self.lidar_channels,
            azimuth_step: self.lidar_azimuth_step,
            ..LidarConfig::default()
        }
    }

    fn layout(&self, mirror_distance: f64) -> OaaLayout {
        OaaLayout {
            mirror_distance,
            mirror_lateral: self.mirror_lateral,
            mirror_height: self.mirror_height,
            tilt_deg: self.mirror_theta,
            area: self.mirror_area,
            panel_height: self.mirror_panel_height,
            wall_offset: self.wall_offset,
            ..OaaLayout::default()
        }
    }

    fn injection(&self) -> InjectionConfig {
        InjectionConfig {
            params: self.params,
            sensor_height: self.lidar().mount_height,
            seed: self.seed,
            ..InjectionConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Along-route position, m.
    pub position: f64,
    /// m/s, never negative.
    pub speed: f64,
    /// Commanded acceleration, m/s^2 (negative when braking).
    pub accel: f64,
}

impl VehicleState {
    /// Constant acceleration for `dt`, stopping at zero speed. Returns the
    /// time into the step at which the vehicle stopped, if it did.
    fn advance(&mut self, dt: f64) -> Option<f64> {
        if self.accel < 0.0 && self.speed + self.accel * dt <= 0.0 {
            let t_stop = if self.speed > 0.0 { self.speed / -self.accel } else { 0.0 };
            self.position += self.speed * t_stop + 0.5 * self.accel * t_stop * t_stop;
            let stopped_now = self.speed > 0.0;
            self.speed = 0.0;
            return stopped_now.then_some(t_stop);
        }
        self.position += self.speed * dt + 0.5 * self.accel * dt * dt;
        self.speed = (self.speed + self.accel * dt).max(0.0);
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Event {
    AttackTrigger,
    EgoBrake,
    FollowerBrake,
    Collision,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::AttackTrigger => "attack-trigger",
            Event::EgoBrake => "ego-brake",
            Event::FollowerBrake => "follower-brake",
            Event::Collision => "collision",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub v_ego: f64,
    pub v_follower: f64,
    pub gap: f64,
    pub ttc: f64,
    /// Phantom points in this tick's scan.
    pub n_injected: usize,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub collision: bool,
    pub collision_time: Option<f64>,
    pub min_ttc: f64,
    pub attack_time: Option<f64>,
    pub ego_brake_time: Option<f64>,
    pub follower_brake_time: Option<f64>,
    /// Exact instant the ego came to rest.
    pub ego_stop_time: Option<f64>,
    /// Phantom points in the scan that made the ego brake.
    pub points_at_brake: Option<usize>,
}

impl ScenarioSummary {
    /// Time from the brake command to standstill.
    pub fn ego_stop_duration(&self) -> Option<f64> {
        Some(self.ego_stop_time? - self.ego_brake_time?)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_sig9);
        format!(
            "collision={}\ncollision_time={}\nmin_ttc={}\nattack_time={}\nego_brake_time={}\n\
             follower_brake_time={}\nego_stop_time={}\nego_stop_duration={}\npoints_at_brake={}\n",
            self.collision,
            opt(self.collision_time),
            fmt_sig9(self.min_ttc),
            opt(self.attack_time),
            opt(self.ego_brake_time),
            opt(self.follower_brake_time),
            opt(self.ego_stop_time),
            opt(self.ego_stop_duration()),
            self.points_at_brake.map_or_else(|| "none".to_string(), |n| n.to_string()),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLog {
    pub records: Vec<TickRecord>,
    pub summary: ScenarioSummary,
}

impl ScenarioLog {
    pub const CSV_HEADER: &'static str = "t,v_ego,v_follower,gap,ttc,n_injected,event";

    /// Events in order of occurrence.
    pub fn events(&self) -> Vec<Event> {
        self.records.iter().flat_map(|r| r.events.iter().copied()).collect()
    }

    /// One row per tick; simultaneous events are joined with `|`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let events: Vec<&str> = r.events.iter().map(|e| e.as_str()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_sig9(r.t),
                fmt_sig9(r.v_ego),
                fmt_sig9(r.v_follower),
                fmt_sig9(r.gap),
                fmt_sig9(r.ttc),
                r.n_injected,
                events.join("|")
            ));
        }
        out
    }
}

/// Stepping state of one run.
pub struct Simulation {
    config: ScenarioConfig,
    lidar: LidarConfig,
    injection: InjectionConfig,
    rng: ChaCha8Rng,
    /// Ground-only scan, identical at every pose on a flat road.
    native: PointCloud,
    /// World-frame scene for route ray tracing.
    route_scene: Option<Scene>,
    /// Ego-relative attacked scan for fixed ray tracing.
    fixed_scan: Option<PointCloud>,
    pub tick: u64,
    pub ego: VehicleState,
    pub follower: VehicleState,
    ego_braking: bool,
    follower_onset: Option<f64>,
    follower_braking: bool,
    collided: bool,
    pending: Vec<Event>,
    summary: ScenarioSummary,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let lidar = config.lidar();
        let origin = SensorPose::at(0.0, 0.0, &lidar);
        let native = scan(&Scene::flat_ground(), &origin, &lidar)?;
        let (route_scene, fixed_scan) = match (config.attack, config.placement) {
            (AttackMode::RayTraced, MirrorPlacement::Route) => {
                (Some(config.layout(config.mirror_s).scene(true)?), None)
            }
            (AttackMode::RayTraced, MirrorPlacement::Fixed) => {
                let scene = config.layout(config.mirror_d).scene(true)?;
                (None, Some(scan(&scene, &origin, &lidar)?))
            }
            _ => (None, None),
        };
        let injection = config.injection();
        let ms = config.ego_speed_kmh / 3.6;
        let fs = config.follower_speed_kmh / 3.6;
        Ok(Self {
            rng: injection.rng(),
            config: config.clone(),
            lidar,
            injection,
            native,
            route_scene,
            fixed_scan,
            tick: 0,
            ego: VehicleState {
                position: 0.0,
                speed: ms,
                accel: 0.0,
            },
            follower: VehicleState {
                position: -config.gap,
                speed: fs,
                accel: 0.0,
            },
            ego_braking: false,
            follower_onset: None,
            follower_braking: false,
            collided: false,
            pending: Vec::new(),
            summary: ScenarioSummary {
                collision: false,
                collision_time: None,
                min_ttc: f64::INFINITY,
                attack_time: None,
                ego_brake_time: None,
                follower_brake_time: None,
                ego_stop_time: None,
                points_at_brake: None,
            },
        })
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.tick
    }

    pub fn gap(&self) -> f64 {
        self.ego.position - self.follower.position
    }

    pub fn summary(&self) -> &ScenarioSummary {
        &self.summary
    }

    fn ego_pose(&self) -> SensorPose {
        SensorPose::at(0.0, self.ego.position, &self.lidar)
    }

    /// The ego's scan this tick and the number of phantom points in it.
    fn perceive(&mut self, t: f64) -> Result<(PointCloud, usize)> {
        let c = &self.config;
        match (c.attack, c.placement) {
            (AttackMode::Disabled, _) => Ok((self.native.clone(), 0)),
            (AttackMode::RayTraced, MirrorPlacement::Route) => {
                let scene = self.route_scene.as_ref().expect("built for route ray tracing");
                let cloud = scan(scene, &self.ego_pose(), &self.lidar)?;
                let n = cloud.count_tag(PointTag::Virtual);
                Ok((cloud, n))
            }
            (AttackMode::RayTraced, MirrorPlacement::Fixed) => {
                if t + 1e-9 < c.attack_start {
                    return Ok((self.native.clone(), 0));
                }
                let cloud = self.fixed_scan.clone().expect("built for fixed ray tracing");
                let n = cloud.count_tag(PointTag::Virtual);
                Ok((cloud, n))
            }
            (AttackMode::Model, placement) => {
                let state = match placement {
                    MirrorPlacement::Fixed => (t + 1e-9 >= c.attack_start)
                        .then(|| MirrorState::new(c.mirror_d, c.mirror_theta, c.mirror_area))
                        .transpose()?,
                    MirrorPlacement::Route => {
                        let panel = c.layout(c.mirror_s).panel()?;
                        // past the panel, or at tilts the model does not cover
                        extract_state(&self.ego_pose(), &panel)
                            .ok()
                            .filter(|s| s.theta_deg < MAX_LATERAL_TILT_DEG)
                    }
                };
                let mut native = self.native.clone();
                native.frame = self.tick;
                native.timestamp = t;
                match state {
                    None => Ok((native, 0)),
                    Some(state) => {
                        let (cloud, report) = inject(&native, &state, &self.injection, &mut self.rng)?;
                        Ok((cloud, report.n_injected))
                    }
                }
            }
        }
    }

    /// Cluster-in-corridor obstacle test on a sensor-frame scan.
    fn obstacle_ahead(&self, cloud: &PointCloud) -> bool {
        let c = &self.config;
        let floor = c.obstacle_min_height - self.lidar.mount_height;
        let elevated: Vec<_> = cloud.points.iter().filter(|p| p.position.z > floor).copied().collect();
        if elevated.len() < c.min_cluster_points {
            return false;
        }
        let positions: Vec<Vec3> = elevated.iter().map(|p| p.position).collect();
        cluster_indices(&positions, c.cluster_radius, c.min_cluster_points)
            .iter()
            .any(|ids| {
                let pts: Vec<_> = ids.iter().map(|&i| elevated[i]).collect();
                let m = centroid(&pts).expect("clusters are non-empty");
                m.x.abs() <= c.corridor_half_width && m.y > 0.0 && m.y <= c.lookahead
            })
    }

    /// Perceives and records the state at the current tick, then integrates
    /// to the next one.
    pub fn step(&mut self) -> Result<TickRecord> {
        let t = self.time();
        let dt = self.config.tick;
        let mut events = std::mem::take(&mut self.pending);

        let (cloud, n_injected) = self.perceive(t)?;
        if n_injected > 0 && self.summary.attack_time.is_none() {
            self.summary.attack_time = Some(t);
            events.push(Event::AttackTrigger);
        }
        if !self.ego_braking && self.obstacle_ahead(&cloud) {
            // latched until standstill
            self.ego_braking = true;
            self.ego.accel = -self.config.ego_decel;
            self.summary.ego_brake_time = Some(t);
            self.summary.points_at_brake = Some(n_injected);
            events.push(Event::EgoBrake);
        }
        if self.follower_onset.is_none() && -self.ego.accel > self.config.follower_trigger_decel {
            self.follower_onset = Some(t + self.config.follower_reaction);
        }
        if !self.follower_braking && self.follower_onset.is_some_and(|on| on <= t + 1e-9) {
            self.start_follower_braking(self.follower_onset.expect("checked"));
            events.push(Event::FollowerBrake);
        }

        let gap = self.gap();
        let record = TickRecord {
            t,
            v_ego: self.ego.speed,
            v_follower: self.follower.speed,
            gap,
            ttc: ttc(gap, self.ego.speed, self.follower.speed),
            n_injected,
            events,
        };
        if !self.collided {
            self.summary.min_ttc = self.summary.min_ttc.min(record.ttc);
        }

        // integrate to t + dt; the follower may start braking mid-step
        if let Some(t_stop) = self.ego.advance(dt) {
            if self.ego_braking {
                self.summary.ego_stop_time = Some(t + t_stop);
            }
        }
        match self.follower_onset {
            Some(on) if !self.follower_braking && on < t + dt - 1e-9 => {
                let first = on - t;
                self.follower.advance(first);
                self.start_follower_braking(on);
                self.follower.advance(dt - first);
                self.pending.push(Event::FollowerBrake);
            }
            _ => {
                self.follower.advance(dt);
            }
        }
        if !self.collided && self.gap() <= 0.0 {
            self.collided = true;
            self.summary.collision = true;
            self.summary.collision_time = Some((self.tick + 1) as f64 * dt);
            self.pending.push(Event::Collision);
        }
        self.tick += 1;
        Ok(record)
    }

    fn start_follower_braking(&mut self, at: f64) {
        self.follower_braking = true;
        self.follower.accel = -self.config.follower_decel;
        self.summary.follower_brake_time = Some(at);
    }

    fn finished(&self) -> bool {
        let t = self.time();
        if let Some(tc) = self.summary.collision_time {
            return t >= tc + self.config.post_collision - 1e-9;
        }
        let both_stopped = self.ego.speed == 0.0 && self.follower.speed == 0.0;
        both_stopped || t > self.config.max_time + 1e-9
    }
}

/// Runs until both vehicles stop, `post_collision` seconds after a
/// collision, or `max_time`.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioLog> {
    let mut sim = Simulation::new(config)?;
    let mut records = Vec::new();
    loop {
        records.push(sim.step()?);
        if sim.finished() {
            break;
        }
    }
    // the final state, carrying any events raised by the last step
    let gap = sim.gap();
    records.push(TickRecord {
        t: sim.time(),
        v_ego: sim.ego.speed,
        v_follower: sim.follower.speed,
        gap,
        ttc: ttc(gap, sim.ego.speed, sim.follower.speed),
        n_injected: 0,
        events: std::mem::take(&mut sim.pending),
    });
    Ok(ScenarioLog {
        records,
        summary: sim.summary.clone(),
    })
}

/// One outcome of the mirror-configuration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessRow {
    pub state: MirrorState,
    pub mode: AttackMode,
    /// Phantom points when the ego braked, or the most seen in any tick.
    pub points: usize,
    pub triggered: bool,
    pub emergency_brake: bool,
    pub collision: bool,
}

impl EffectivenessRow {
    pub const CSV_HEADER: &'static str = "d,theta,area,mode,points,triggered,brake,collision";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_sig9(self.state.d),
            fmt_sig9(self.state.theta_deg),
            fmt_sig9(self.state.area),
            self.mode,
            self.points,
            self.triggered,
            self.emergency_brake,
            self.collision
        )
    }
}

/// The mirror configurations of the effectiveness table.
pub const EFFECTIVENESS_CONFIGS: [(f64, f64, f64); 3] = [(4.0, 30.0, 0.18), (5.0, 45.0, 0.36), (7.0, 60.0, 0.60)];

/// Runs each state as a fixed placement, one row per state. With
/// `base.attack` set to model injection, states beyond the offset model's
/// tilt domain fall back to ray tracing; otherwise every state uses
/// `base.attack`. Run `i` uses seed `base.seed + i`.
pub fn effectiveness_sweep(base: &ScenarioConfig, states: &[MirrorState]) -> Result<Vec<EffectivenessRow>> {
    use rayon::prelude::*;
    let jobs: Vec<(MirrorState, AttackMode)> = states
        .iter()
        .map(|s| match base.attack {
            AttackMode::Model if s.theta_deg >= MAX_LATERAL_TILT_DEG => (*s, AttackMode::RayTraced),
            mode => (*s, mode),
        })
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(i, (state, mode))| {
            let config = ScenarioConfig {
                attack: *mode,
                placement: MirrorPlacement::Fixed,
                mirror_d: state.d,
                mirror_theta: state.theta_deg,
                mirror_area: state.area,
                seed: base.seed + i as u64,
                ..base.clone()
            };
            let log = run(&config)?;
            let most = log.records.iter().map(|r| r.n_injected).max().unwrap_or(0);
            Ok(EffectivenessRow {
                state: *state,
                mode: *mode,
                points: log.summary.points_at_brake.unwrap_or(most),
                triggered: log.summary.attack_time.is_some(),
                emergency_brake: log.summary.ego_brake_time.is_some(),
                collision: log.summary.collision,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ttc_cases() {
        assert_eq!(ttc(10.0, 0.0, 5.0), 2.0);
        assert!(ttc(10.0, 5.0, 3.0).is_infinite());
        assert_eq!(ttc(0.0, 1.0, 4.0), 0.0);
        assert_eq!(ttc(-1.0, 1.0, 4.0), 0.0);
    }

    #[test]
    fn default_oracle_margin() {
        let v: f64 = 25.0 / 3.6;
        // follower needs about 12.34 m, the ego leaves 11.01 m
        let follower = v * 1.2 + v * v / 12.0;
        let available = 8.0 + v * v / 16.0;
        assert!((follower - 12.35).abs() < 0.01 && (available - 11.01).abs() < 0.01);
        assert!(stopping_distance_collides(v, 8.0, 8.0, 6.0, 1.2));
        assert!(!stopping_distance_collides(v, 8.0, 8.0, 8.0, 0.0));
    }

    #[test]
    fn vehicle_stops_exactly() {
        let mut v = VehicleState {
            position: 0.0,
            speed: 4.0,
            accel: -8.0,
        };
        let t = v.advance(1.0).unwrap();
        assert_eq!(t, 0.5);
        assert_eq!(v.position, 1.0);
        assert_eq!(v.speed, 0.0);
        assert!(v.advance(1.0).is_none());
        assert_eq!(v.position, 1.0);
    }

    #[test]
    fn config_round_trip_and_rejections() {
        let c = ScenarioConfig {
            attack: AttackMode::Disabled,
            gap: 12.5,
            ..ScenarioConfig::default()
        };
        assert_eq!(ScenarioConfig::parse(&c.to_text()).unwrap(), c);
        assert!(ScenarioConfig::parse("bogus=1").is_err());
        assert!(ScenarioConfig::parse("tick=0").is_err());
        assert!(ScenarioConfig::parse("attack=laser").is_err());
        assert!(matches!(
            ScenarioConfig::parse("attack=model\nmirror_placement=fixed\nmirror_theta=45"),
            Err(Error::Domain(_))
        ));
    }
}
