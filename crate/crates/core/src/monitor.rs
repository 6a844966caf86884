//! Landing monitor for the lower-priority vehicle.
//!
//! The monitor filters each detection frame (confidence pre-filter, then
//! NMS), keeps the most confident surviving box, and samples its center on
//! a grid of `delta_t` seconds while waiting. Landing of the tracked vehicle
//! is declared when two consecutive samples are more than `sigma` pixels
//! apart:
//!
//! ```text
//! f(t) = sqrt((x_{t+Δt} - x_t)² + (y_{t+Δt} - y_t)²) > σ
//! ```
//!
//! Transitions: `EnRoute → Waiting` on first detection, `Waiting → Proceed`
//! on landing, `Waiting → EnRoute` after `track_loss_timeout` without
//! detections, `EnRoute → Proceed` when the caller commits to landing, and
//! `Proceed → Landed` on touchdown. `Landed` is terminal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{confidence_filter, nms, Detection, DetectionFrame};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MonitorError {
    #[error("time went backwards: {curr} s after {prev} s")]
    NonMonotonicTime { prev: f64, curr: f64 },
    #[error("invalid monitor configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("illegal transition {from:?} -> {to:?}")]
    IllegalTransition { from: Mode, to: Mode },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Landing threshold in pixels.
    pub sigma: f64,
    /// Sampling interval in seconds.
    pub delta_t: f64,
    pub track_loss_timeout: f64,
    pub confidence_threshold: f64,
    pub iou_threshold: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            sigma: 150.0,
            delta_t: 1.0,
            track_loss_timeout: 3.0,
            confidence_threshold: crate::detection::DEFAULT_CONFIDENCE_THRESHOLD,
            iou_threshold: crate::detection::DEFAULT_IOU_THRESHOLD,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<(), MonitorError> {
        // sigma may be +inf (never trigger)
        if !(self.sigma > 0.0) {
            return Err(MonitorError::InvalidConfig("sigma must be positive"));
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(MonitorError::InvalidConfig("delta_t must be positive"));
        }
        if !(self.track_loss_timeout > 0.0) {
            return Err(MonitorError::InvalidConfig(
                "track_loss_timeout must be positive",
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold)
            || !(0.0..=1.0).contains(&self.iou_threshold)
        {
            return Err(MonitorError::InvalidConfig("thresholds must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    EnRoute,
    Waiting,
    Proceed,
    Landed,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::EnRoute => "EN_ROUTE",
            Mode::Waiting => "WAITING",
            Mode::Proceed => "PROCEED",
            Mode::Landed => "LANDED",
        }
    }

    pub fn can_transition_to(self, next: Mode) -> bool {
        use Mode::*;
        matches!(
            (self, next),
            (EnRoute, Waiting)
                | (EnRoute, Proceed)
                | (Waiting, Proceed)
                | (Waiting, EnRoute)
                | (Proceed, Landed)
        )
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Box center at a sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MonitorEvent {
    None,
    HoverCommanded,
    /// Carries the displacement that crossed the threshold.
    LandingDetected {
        f: f64,
    },
    TrackLost,
}

impl MonitorEvent {
    pub fn name(&self) -> Option<&'static str> {
        match self {
            MonitorEvent::None => None,
            MonitorEvent::HoverCommanded => Some("HoverCommanded"),
            MonitorEvent::LandingDetected { .. } => Some("LandingDetected"),
            MonitorEvent::TrackLost => Some("TrackLost"),
        }
    }

    pub fn displacement(&self) -> Option<f64> {
        match self {
            MonitorEvent::LandingDetected { f } => Some(*f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorState {
    pub mode: Mode,
    /// Most recent grid sample while waiting.
    pub last_sample: Option<TrackSample>,
    /// Time of the last frame with a surviving detection.
    pub last_seen_t: Option<f64>,
    last_frame_t: Option<f64>,
    /// Start of the sampling grid and the index of the next deadline on it.
    grid_origin: f64,
    next_sample: u64,
}

impl Default for MonitorState {
    fn default() -> Self {
        Self::new()
    }
}

impl MonitorState {
    pub fn new() -> Self {
        Self {
            mode: Mode::EnRoute,
            last_sample: None,
            last_seen_t: None,
            last_frame_t: None,
            grid_origin: 0.0,
            next_sample: 0,
        }
    }

    fn deadline(&self, delta_t: f64) -> f64 {
        self.grid_origin + self.next_sample as f64 * delta_t
    }

    fn enter(&mut self, next: Mode) {
        debug_assert!(
            self.mode.can_transition_to(next),
            "{:?} -> {:?}",
            self.mode,
            next
        );
        self.mode = next;
    }

    /// Caller-driven `EnRoute → Proceed` (no detection ever stopped us).
    pub fn commit_to_landing(mut self) -> Result<Self, MonitorError> {
        self.transition(Mode::Proceed)?;
        Ok(self)
    }

    /// Caller-driven `Proceed → Landed` on touchdown.
    pub fn touch_down(mut self) -> Result<Self, MonitorError> {
        self.transition(Mode::Landed)?;
        Ok(self)
    }

    fn transition(&mut self, next: Mode) -> Result<(), MonitorError> {
        if !self.mode.can_transition_to(next) {
            return Err(MonitorError::IllegalTransition {
                from: self.mode,
                to: next,
            });
        }
        self.mode = next;
        Ok(())
    }
}

/// Euclidean pixel distance between two samples.
pub fn displacement(prev: &TrackSample, curr: &TrackSample) -> Result<f64, MonitorError> {
    if !(curr.t > prev.t) {
        return Err(MonitorError::NonMonotonicTime {
            prev: prev.t,
            curr: curr.t,
        });
    }
    Ok((curr.x - prev.x).hypot(curr.y - prev.y))
}

/// Most confident detection; the first one wins ties.
pub fn best_detection(frame: &DetectionFrame) -> Option<Detection> {
    frame
        .detections
        .iter()
        .copied()
        .fold(None, |best: Option<Detection>, d| match best {
            Some(b) if b.confidence >= d.confidence => Some(b),
            _ => Some(d),
        })
}

/// Advances the monitor by one frame.
pub fn step(
    state: MonitorState,
    frame: &DetectionFrame,
    config: &MonitorConfig,
) -> Result<(MonitorState, MonitorEvent), MonitorError> {
    if let Some(prev) = state.last_frame_t {
        if frame.t < prev {
            return Err(MonitorError::NonMonotonicTime {
                prev,
                curr: frame.t,
            });
        }
    }
    let mut next = state;
    next.last_frame_t = Some(frame.t);
    if matches!(state.mode, Mode::Proceed | Mode::Landed) {
        return Ok((next, MonitorEvent::None));
    }

    let kept = nms(
        &confidence_filter(frame, config.confidence_threshold),
        config.iou_threshold,
    );
    let best = best_detection(&kept);
    let t = frame.t;

    match (state.mode, best) {
        (Mode::EnRoute, Some(det)) => {
            next.enter(Mode::Waiting);
            next.last_seen_t = Some(t);
            next.last_sample = Some(TrackSample {
                t,
                x: det.bbox.x,
                y: det.bbox.y,
            });
            next.grid_origin = t;
            next.next_sample = 1;
            Ok((next, MonitorEvent::HoverCommanded))
        }
        (Mode::EnRoute, None) => Ok((next, MonitorEvent::None)),
        (Mode::Waiting, Some(det)) => {
            next.last_seen_t = Some(t);
            if t < state.deadline(config.delta_t) {
                return Ok((next, MonitorEvent::None));
            }
            let sample = TrackSample {
                t,
                x: det.bbox.x,
                y: det.bbox.y,
            };
            // Skip grid points that passed without a usable frame.
            while next.deadline(config.delta_t) <= t {
                next.next_sample += 1;
            }
            let prev = state.last_sample.expect("waiting always holds a sample");
            let f = displacement(&prev, &sample)?;
            next.last_sample = Some(sample);
            if f > config.sigma {
                next.enter(Mode::Proceed);
                Ok((next, MonitorEvent::LandingDetected { f }))
            } else {
                Ok((next, MonitorEvent::None))
            }
        }
        (Mode::Waiting, None) => {
            let seen = state.last_seen_t.expect("waiting always has a sighting");
            if t - seen >= config.track_loss_timeout {
                next.enter(Mode::EnRoute);
                next.last_sample = None;
                Ok((next, MonitorEvent::TrackLost))
            } else {
                Ok((next, MonitorEvent::None))
            }
        }
        (Mode::Proceed | Mode::Landed, _) => unreachable!(),
    }
}

/// Owning wrapper that threads state through [`step`].
#[derive(Debug, Clone)]
pub struct LandingMonitor {
    config: MonitorConfig,
    state: MonitorState,
}

impl LandingMonitor {
    pub fn new(config: MonitorConfig) -> Result<Self, MonitorError> {
        config.validate()?;
        Ok(Self {
            config,
            state: MonitorState::new(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.state.mode
    }

    pub fn state(&self) -> &MonitorState {
        &self.state
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn observe(&mut self, frame: &DetectionFrame) -> Result<MonitorEvent, MonitorError> {
        let (state, event) = step(self.state, frame, &self.config)?;
        self.state = state;
        Ok(event)
    }

    pub fn commit_to_landing(&mut self) -> Result<(), MonitorError> {
        self.state = self.state.commit_to_landing()?;
        Ok(())
    }

    pub fn touch_down(&mut self) -> Result<(), MonitorError> {
        self.state = self.state.touch_down()?;
        Ok(())
    }
}
