//! Proportional velocity guidance with a transport delay on commands.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::WorldPoint;
use crate::monitor::Mode;

/// Slack when comparing issue times against `now - delay`, so that a delay
/// of exactly N ticks is not lost to floating-point round-off.
pub const TIME_EPS: f64 = 1e-9;

/// World-frame velocity in cm/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub t_issued: f64,
}

impl VelocityCommand {
    pub fn zero(t_issued: f64) -> Self {
        Self {
            vx: 0.0,
            vy: 0.0,
            vz: 0.0,
            t_issued,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0 && self.vz == 0.0
    }

    pub fn horizontal_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    /// Velocity in m/s.
    pub fn meters_per_second(&self) -> [f64; 3] {
        [self.vx / 100.0, self.vy / 100.0, self.vz / 100.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    /// Proportional gain, 1/s.
    pub gain: f64,
    /// Per-axis speed limit, cm/s.
    pub v_max: f64,
    /// Transport delay, s.
    pub command_delay: f64,
    #[serde(default = "origin")]
    pub landing_zone: WorldPoint,
    /// Descent speed once over the landing zone, cm/s.
    pub descend_rate: f64,
    /// Horizontal distance (m) within which descent starts.
    pub arrival_radius: f64,
}

fn origin() -> WorldPoint {
    WorldPoint::new(0.0, 0.0, 0.0)
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            gain: 0.3,
            v_max: 100.0,
            command_delay: 1.0,
            landing_zone: origin(),
            descend_rate: 30.0,
            arrival_radius: 0.15,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err("gain must be positive");
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err("v_max must be positive");
        }
        if !(self.command_delay >= 0.0 && self.command_delay.is_finite()) {
            return Err("command_delay must be non-negative");
        }
        if !(self.arrival_radius > 0.0) {
            return Err("arrival_radius must be positive");
        }
        if !(self.descend_rate >= 0.0 && self.descend_rate.is_finite()) {
            return Err("descend_rate must be non-negative");
        }
        if !self.landing_zone.is_finite() {
            return Err("landing_zone must be finite");
        }
        Ok(())
    }
}

/// Horizontal (x, y) distance in meters.
pub fn horizontal_distance(a: &WorldPoint, b: &WorldPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Velocity command toward `target`, issued at `t`.
///
/// Zero while waiting or landed. Otherwise each horizontal axis is
/// `gain · error` (cm/s) clamped to `±v_max`; in `Proceed`, once within
/// `arrival_radius` of the target and still above it, the vehicle also
/// descends at `descend_rate`.
pub fn compute_command(
    current: &WorldPoint,
    target: &WorldPoint,
    config: &GuidanceConfig,
    mode: Mode,
    t: f64,
) -> VelocityCommand {
    match mode {
        Mode::Waiting | Mode::Landed => VelocityCommand::zero(t),
        Mode::EnRoute | Mode::Proceed => {
            let axis =
                |err_m: f64| (config.gain * err_m * 100.0).clamp(-config.v_max, config.v_max);
            let vz = if mode == Mode::Proceed
                && horizontal_distance(current, target) <= config.arrival_radius
                && current.z > target.z
            {
                -config.descend_rate
            } else {
                0.0
            };
            VelocityCommand {
                vx: axis(target.x - current.x),
                vy: axis(target.y - current.y),
                vz,
                t_issued: t,
            }
        }
    }
}

/// Newest command in `queue` issued no later than `now - delay`; zero
/// velocity when none has matured yet.
pub fn apply_latency<'a, I>(queue: I, now: f64, config: &GuidanceConfig) -> VelocityCommand
where
    I: IntoIterator<Item = &'a VelocityCommand>,
{
    let cutoff = now - config.command_delay + TIME_EPS;
    queue
        .into_iter()
        .take_while(|c| c.t_issued <= cutoff)
        .last()
        .copied()
        .unwrap_or_else(|| VelocityCommand::zero(f64::NEG_INFINITY))
}

/// Single-owner command pipe: commands go in as issued and come out once
/// they have aged by the configured delay.
#[derive(Debug, Clone, Default)]
pub struct LatencyQueue {
    pending: VecDeque<VelocityCommand>,
    active: Option<VelocityCommand>,
}

impl LatencyQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, command: VelocityCommand) {
        debug_assert!(self
            .pending
            .back()
            .is_none_or(|c| c.t_issued <= command.t_issued));
        self.pending.push_back(command);
    }

    /// Command in force at `now`; matured commands are retired from the queue.
    pub fn poll(&mut self, now: f64, config: &GuidanceConfig) -> VelocityCommand {
        let cutoff = now - config.command_delay + TIME_EPS;
        while self.pending.front().is_some_and(|c| c.t_issued <= cutoff) {
            self.active = self.pending.pop_front();
        }
        self.active
            .unwrap_or_else(|| VelocityCommand::zero(f64::NEG_INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> WorldPoint {
        WorldPoint::new(x, y, z)
    }

    #[test]
    fn zero_error_gives_zero_command() {
        let cfg = GuidanceConfig::default();
        for mode in [Mode::EnRoute, Mode::Waiting, Mode::Proceed, Mode::Landed] {
            let c = compute_command(&p(1.0, 2.0, 0.0), &p(1.0, 2.0, 0.0), &cfg, mode, 0.0);
            assert!(c.is_zero(), "{mode:?}");
        }
    }

    #[test]
    fn waiting_is_exactly_zero() {
        let c = compute_command(
            &p(0.0, 0.0, 1.0),
            &p(1.0, 0.0, 0.0),
            &GuidanceConfig::default(),
            Mode::Waiting,
            3.0,
        );
        assert!(c.is_zero());
        assert_eq!(c.t_issued, 3.0);
    }

    #[test]
    fn clamp_boundary() {
        let cfg = GuidanceConfig {
            gain: 0.5,
            v_max: 100.0,
            ..GuidanceConfig::default()
        };
        let c = compute_command(
            &p(0.0, 0.0, 1.0),
            &p(2.0, 0.0, 1.0),
            &cfg,
            Mode::EnRoute,
            0.0,
        );
        assert_eq!((c.vx, c.vy, c.vz), (100.0, 0.0, 0.0));
        let far = compute_command(
            &p(0.0, 0.0, 1.0),
            &p(-5.0, 0.5, 1.0),
            &cfg,
            Mode::EnRoute,
            0.0,
        );
        assert_eq!((far.vx, far.vy), (-100.0, 25.0));
    }

    #[test]
    fn descends_only_in_proceed_near_target() {
        let cfg = GuidanceConfig::default();
        let here = p(0.0, 0.1, 1.0);
        let zone = p(0.0, 0.0, 0.0);
        assert_eq!(
            compute_command(&here, &zone, &cfg, Mode::Proceed, 0.0).vz,
            -30.0
        );
        assert_eq!(
            compute_command(&here, &zone, &cfg, Mode::EnRoute, 0.0).vz,
            0.0
        );
        assert_eq!(
            compute_command(&p(0.0, 1.0, 1.0), &zone, &cfg, Mode::Proceed, 0.0).vz,
            0.0
        );
    }

    #[test]
    fn latency_examples() {
        let cfg = GuidanceConfig::default();
        let cmd = VelocityCommand {
            vx: 10.0,
            vy: -5.0,
            vz: 0.0,
            t_issued: 5.0,
        };
        let q = [cmd];
        assert!(apply_latency(&q, 5.5, &cfg).is_zero());
        assert_eq!(apply_latency(&q, 6.0, &cfg), cmd);
        let instant = GuidanceConfig {
            command_delay: 0.0,
            ..cfg
        };
        let newer = VelocityCommand {
            t_issued: 5.2,
            vx: 1.0,
            ..cmd
        };
        assert_eq!(apply_latency(&[cmd, newer], 5.2, &instant), newer);
    }

    #[test]
    fn latency_queue_matches_apply_latency() {
        let cfg = GuidanceConfig::default();
        let dt = 0.05;
        let mut q = LatencyQueue::new();
        let mut all = Vec::new();
        for k in 0..200 {
            let t = k as f64 * dt;
            let c = VelocityCommand {
                vx: k as f64,
                vy: 0.0,
                vz: 0.0,
                t_issued: t,
            };
            q.push(c);
            all.push(c);
            let a = q.poll(t, &cfg);
            let b = apply_latency(&all, t, &cfg);
            assert_eq!(a, b);
            if k >= 20 {
                // exactly 20 ticks of delay at every step
                assert_eq!(a.vx, (k - 20) as f64);
            }
        }
    }
}
