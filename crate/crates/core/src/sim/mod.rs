//! Deterministic two-vehicle landing simulation.
//!
//! Each tick the Level II vehicle observes the pose tags (with pixel noise),
//! solves PnP for its own position, receives a synthetic detection frame of
//! the Level I vehicle, advances the landing monitor, issues a guidance
//! command and integrates the command that has cleared the transport delay.

pub mod io;
mod scenarios;

pub use scenarios::{baseline, crossing_ablation, no_level1};

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{projected_hull, synth_detect, DetectionError, DetectionFrame, NoiseSpec};
use crate::geometry::tags::{observe_corners, TagSpec};
use crate::geometry::{solve_pnp, CameraIntrinsics, GeometryError, Pose, WorldPoint};
use crate::guidance::{compute_command, horizontal_distance, GuidanceConfig, LatencyQueue};
use crate::monitor::{LandingMonitor, Mode, MonitorConfig, MonitorError, MonitorEvent};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Level I position at time `t` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub xyz_m: WorldPoint,
}

/// Piecewise-linear schedule. The vehicle is absent before the first
/// waypoint and holds the last one afterwards.
pub fn schedule_position(schedule: &[Waypoint], t: f64) -> Option<WorldPoint> {
    let first = schedule.first()?;
    if t < first.t {
        return None;
    }
    let idx = schedule.partition_point(|w| w.t <= t);
    if idx >= schedule.len() {
        return Some(schedule[schedule.len() - 1].xyz_m);
    }
    let (a, b) = (&schedule[idx - 1], &schedule[idx]);
    let s = (t - a.t) / (b.t - a.t);
    let lerp = |p: f64, q: f64| p + (q - p) * s;
    Some(WorldPoint::new(
        lerp(a.xyz_m.x, b.xyz_m.x),
        lerp(a.xyz_m.y, b.xyz_m.y),
        lerp(a.xyz_m.z, b.xyz_m.z),
    ))
}

fn default_collision_radius() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_image_size() -> [u32; 2] {
    [640, 480]
}
fn default_half_extents() -> [f64; 3] {
    [0.25, 0.25, 0.1]
}
fn default_landing_tag() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub tags: Vec<TagSpec>,
    pub intrinsics: CameraIntrinsics,
    pub level1_trajectory: Vec<Waypoint>,
    pub level2_start: WorldPoint,
    pub level2_landing_zone: WorldPoint,
    pub monitor: MonitorConfig,
    pub guidance: GuidanceConfig,
    pub noise: NoiseSpec,
    pub dt_tick: f64,
    pub duration: f64,
    pub seed: u64,
    /// Center-to-center distance (m) below which the vehicles collide.
    #[serde(default = "default_collision_radius")]
    pub collision_radius: f64,
    /// When false the Level II vehicle ignores the Level I vehicle entirely.
    #[serde(default = "default_true")]
    pub monitor_enabled: bool,
    /// Sensor size in pixels; boxes centered outside it are not detected.
    #[serde(default = "default_image_size")]
    pub image_size: [u32; 2],
    #[serde(default = "default_half_extents")]
    pub level1_half_extents: [f64; 3],
    /// Tag the Level I vehicle lands on; every other tag is used for PnP.
    #[serde(default = "default_landing_tag")]
    pub landing_tag_id: u32,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::ConfigInvalid(m.to_string()));
        if !(self.dt_tick > 0.0 && self.dt_tick.is_finite()) {
            return bad("dt_tick must be positive");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if !(self.collision_radius >= 0.0) {
            return bad("collision_radius must be non-negative");
        }
        let mut ids: Vec<u32> = self.tags.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("tag ids must be unique");
        }
        for tag in &self.tags {
            tag.validate().map_err(SimError::ConfigInvalid)?;
        }
        if self.pose_tags().count() == 0 {
            return bad("at least one pose tag is required");
        }
        if self
            .level1_trajectory
            .windows(2)
            .any(|w| !(w[1].t > w[0].t))
        {
            return bad("level1_trajectory times must be strictly increasing");
        }
        if !self.level2_start.is_finite() || !self.level2_landing_zone.is_finite() {
            return bad("level2 points must be finite");
        }
        if self.level1_half_extents.iter().any(|h| !(*h > 0.0)) {
            return bad("level1_half_extents must be positive");
        }
        self.monitor.validate()?;
        self.guidance
            .validate()
            .map_err(|m| SimError::ConfigInvalid(m.into()))?;
        self.noise
            .validate()
            .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }

    pub fn pose_tags(&self) -> impl Iterator<Item = &TagSpec> {
        self.tags
            .iter()
            .filter(move |t| t.id != self.landing_tag_id)
    }
}

/// World→camera rotation of the forward camera: looking along world `+y`,
/// image `u` along world `+x`, image `v` along world `-z`.
pub fn forward_camera_rotation() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    SafeLanded,
    Collision,
    Timeout,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub event: String,
    pub mode: String,
    pub f: Option<f64>,
}

impl EventRecord {
    pub fn new(t: f64, event: &MonitorEvent, mode: Mode) -> Option<Self> {
        Some(Self {
            t,
            event: event.name()?.to_string(),
            mode: mode.as_str().to_string(),
            f: event.displacement(),
        })
    }
}

/// Issued guidance command together with the mode it was issued in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandSample {
    pub t: f64,
    pub mode: Mode,
    pub vx_cmps: f64,
    pub vy_cmps: f64,
    pub vz_cmps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub level1: Option<WorldPoint>,
    pub level2: WorldPoint,
    /// PnP estimate of the Level II position.
    pub level2_estimate: WorldPoint,
    pub separation_m: Option<f64>,
    pub mode: Mode,
    /// Velocity (m/s) applied over `[t, t + dt_tick)`.
    pub applied_mps: [f64; 3],
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub verdict: Verdict,
    /// Closest center-to-center approach (m); `null` when Level I never appears.
    #[serde(with = "infinite_as_null")]
    pub min_separation: f64,
    pub wait_start: Option<f64>,
    pub landing_detected_t: Option<f64>,
    pub level2_touchdown_t: Option<f64>,
    pub events: Vec<EventRecord>,
    pub commands: Vec<CommandSample>,
    pub trajectory: Vec<TrajectorySample>,
}

impl SimResult {
    pub fn final_mode(&self) -> Option<Mode> {
        self.trajectory.last().map(|s| s.mode)
    }
}

/// Result plus the detection frames the monitor saw, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecording {
    pub result: SimResult,
    pub detections: Vec<DetectionFrame>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<SimResult, SimError> {
    Ok(run_scenario_recorded(config)?.result)
}

pub fn run_scenario_recorded(config: &ScenarioConfig) -> Result<SimRecording, SimError> {
    config.validate()?;
    let mut guidance = config.guidance;
    guidance.landing_zone = config.level2_landing_zone;
    let zone = config.level2_landing_zone;
    let pose_tags: Vec<TagSpec> = config.pose_tags().cloned().collect();
    let cam_rotation = forward_camera_rotation();
    let half = Vector3::from(config.level1_half_extents);
    let [img_w, img_h] = config.image_size.map(f64::from);

    let mut corner_rng = ChaCha8Rng::seed_from_u64(config.seed);
    corner_rng.set_stream(1);
    let mut detector_rng = ChaCha8Rng::seed_from_u64(config.seed);
    detector_rng.set_stream(2);
    let corner_noise = Normal::new(0.0, config.noise.pixel_noise_sigma)
        .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;

    let mut monitor = LandingMonitor::new(config.monitor)?;
    let mut queue = LatencyQueue::new();
    let mut level2 = config.level2_start;
    let mut last_estimate: Option<WorldPoint> = None;

    let mut result = SimResult {
        verdict: Verdict::Timeout,
        min_separation: f64::INFINITY,
        wait_start: None,
        landing_detected_t: None,
        level2_touchdown_t: None,
        events: Vec::new(),
        commands: Vec::new(),
        trajectory: Vec::new(),
    };
    let mut detections = Vec::new();

    let ticks = (config.duration / config.dt_tick + 1e-9).floor() as u64;
    for k in 0..=ticks {
        let t = k as f64 * config.dt_tick;
        let level1 = schedule_position(&config.level1_trajectory, t);
        let separation = level1.map(|p| p.distance(&level2));
        if let Some(sep) = separation {
            result.min_separation = result.min_separation.min(sep);
        }

        // Self-localization from the tag wall.
        let observer = Pose::from_center(cam_rotation, &level2)?;
        let mut corners = observe_corners(&pose_tags, &observer, &config.intrinsics)?;
        if config.noise.pixel_noise_sigma > 0.0 {
            for c in &mut corners {
                c.pixel.u += corner_noise.sample(&mut corner_rng);
                c.pixel.v += corner_noise.sample(&mut corner_rng);
            }
        }
        let estimate = match solve_pnp(&corners, &config.intrinsics) {
            Ok(pose) => pose.camera_center(),
            Err(e) => last_estimate.ok_or(SimError::Geometry(e))?,
        };
        last_estimate = Some(estimate);

        if separation.is_some_and(|s| s < config.collision_radius) {
            result.verdict = Verdict::Collision;
            result.trajectory.push(TrajectorySample {
                t,
                level1,
                level2,
                level2_estimate: estimate,
                separation_m: separation,
                mode: monitor.mode(),
                applied_mps: [0.0; 3],
            });
            break;
        }

        // Detection of the Level I vehicle.
        let frame = match level1 {
            Some(p) => {
                let target = Pose::from_translation(p.to_vector());
                let visible = projected_hull(&target, &observer, &config.intrinsics, &half)
                    .map(|b| b.x >= 0.0 && b.x <= img_w && b.y >= 0.0 && b.y <= img_h);
                match visible {
                    Ok(true) => match synth_detect(
                        t,
                        &target,
                        &observer,
                        &config.intrinsics,
                        &half,
                        &config.noise,
                        &mut detector_rng,
                    ) {
                        Ok(f) => f,
                        Err(DetectionError::TargetBehindCamera) => DetectionFrame::empty(t),
                        Err(e) => return Err(SimError::ConfigInvalid(e.to_string())),
                    },
                    Ok(false) | Err(_) => DetectionFrame::empty(t),
                }
            }
            None => DetectionFrame::empty(t),
        };

        if config.monitor_enabled {
            let event = monitor.observe(&frame)?;
            match event {
                MonitorEvent::HoverCommanded if result.wait_start.is_none() => {
                    result.wait_start = Some(t)
                }
                MonitorEvent::LandingDetected { .. } => result.landing_detected_t = Some(t),
                _ => {}
            }
            if let Some(rec) = EventRecord::new(t, &event, monitor.mode()) {
                result.events.push(rec);
            }
        }
        detections.push(frame);

        if monitor.mode() == Mode::EnRoute
            && horizontal_distance(&estimate, &zone) <= guidance.arrival_radius
        {
            monitor.commit_to_landing()?;
        }

        let mode = monitor.mode();
        let command = compute_command(&estimate, &zone, &guidance, mode, t);
        result.commands.push(CommandSample {
            t,
            mode,
            vx_cmps: command.vx,
            vy_cmps: command.vy,
            vz_cmps: command.vz,
        });
        queue.push(command);
        let applied = queue.poll(t, &guidance).meters_per_second();

        result.trajectory.push(TrajectorySample {
            t,
            level1,
            level2,
            level2_estimate: estimate,
            separation_m: separation,
            mode,
            applied_mps: applied,
        });

        level2 = WorldPoint::new(
            level2.x + applied[0] * config.dt_tick,
            level2.y + applied[1] * config.dt_tick,
            level2.z + applied[2] * config.dt_tick,
        );

        if level2.z <= zone.z {
            let t_down = (k + 1) as f64 * config.dt_tick;
            result.level2_touchdown_t = Some(t_down);
            let l1 = schedule_position(&config.level1_trajectory, t_down);
            let sep = l1.map(|p| p.distance(&level2));
            if let Some(s) = sep {
                result.min_separation = result.min_separation.min(s);
            }
            if sep.is_some_and(|s| s < config.collision_radius) {
                result.verdict = Verdict::Collision;
            } else if horizontal_distance(&level2, &zone) <= guidance.arrival_radius {
                if monitor.mode() == Mode::Proceed {
                    monitor.touch_down()?;
                }
                result.verdict = Verdict::SafeLanded;
            }
            result.trajectory.push(TrajectorySample {
                t: t_down,
                level1: l1,
                level2,
                level2_estimate: level2,
                separation_m: sep,
                mode: monitor.mode(),
                applied_mps: [0.0; 3],
            });
            break;
        }
    }

    Ok(SimRecording { result, detections })
}

/// Feeds a recorded detection stream through a fresh monitor.
pub fn replay<'a, I>(frames: I, config: &MonitorConfig) -> Result<Vec<EventRecord>, SimError>
where
    I: IntoIterator<Item = &'a DetectionFrame>,
{
    let mut monitor = LandingMonitor::new(*config)?;
    let mut events = Vec::new();
    for frame in frames {
        let event = monitor.observe(frame)?;
        if let Some(rec) = EventRecord::new(frame.t, &event, monitor.mode()) {
            events.push(rec);
        }
    }
    Ok(events)
}

/// Summary row for a batch of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub verdict: Verdict,
    pub min_separation: Option<f64>,
    pub wait_start: Option<f64>,
    pub landing_detected_t: Option<f64>,
    pub level2_touchdown_t: Option<f64>,
}

pub fn sweep(config: &ScenarioConfig, seeds: u64) -> Result<Vec<SweepRow>, SimError> {
    (0..seeds)
        .map(|i| {
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(i);
            let r = run_scenario(&cfg)?;
            Ok(SweepRow {
                seed: cfg.seed,
                verdict: r.verdict,
                min_separation: r.min_separation.is_finite().then_some(r.min_separation),
                wait_start: r.wait_start,
                landing_detected_t: r.landing_detected_t,
                level2_touchdown_t: r.level2_touchdown_t,
            })
        })
        .collect()
}
