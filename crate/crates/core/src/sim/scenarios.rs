//! Reference scenarios on the six-tag wall.
//!
//! World frame: `+y` toward the tag wall, `+x` to the right when facing it,
//! `+z` up. The Level I vehicle appears at t = 4 s hovering over the
//! landing tag (id 6), holds, then drops onto the tag between t = 10 s and
//! 10.5 s. The Level II vehicle starts 9 m from the wall and its landing
//! zone lies 0.8 m beyond the tag, so its straight path crosses the Level I
//! descent column.

use super::{ScenarioConfig, Waypoint};
use crate::detection::NoiseSpec;
use crate::geometry::tags::{floor_tag, wall_layout};
use crate::geometry::{CameraIntrinsics, WorldPoint};
use crate::guidance::GuidanceConfig;
use crate::monitor::MonitorConfig;

fn wp(t: f64, x: f64, y: f64, z: f64) -> Waypoint {
    Waypoint {
        t,
        xyz_m: WorldPoint::new(x, y, z),
    }
}

pub fn baseline() -> ScenarioConfig {
    let mut tags = wall_layout(4.0, 0.6, 2.0, [0.4, 2.4]);
    tags.push(floor_tag(6, 0.3, [0.0, 2.0, 0.0]));
    ScenarioConfig {
        tags,
        intrinsics: CameraIntrinsics::new(1000.0, 1000.0, 640.0, 480.0).expect("valid intrinsics"),
        level1_trajectory: vec![
            wp(4.0, 0.0, 2.0, 1.5),
            wp(10.0, 0.0, 2.0, 1.5),
            wp(10.5, 0.0, 2.0, 0.1),
        ],
        level2_start: WorldPoint::new(0.0, -5.0, 1.2),
        level2_landing_zone: WorldPoint::new(0.0, 2.8, 0.0),
        monitor: MonitorConfig::default(),
        guidance: GuidanceConfig::default(),
        noise: NoiseSpec {
            dropout_prob: 0.05,
            ..NoiseSpec::default()
        },
        dt_tick: 0.05,
        duration: 45.0,
        seed: 7,
        collision_radius: 0.5,
        monitor_enabled: true,
        image_size: [1280, 960],
        level1_half_extents: [0.25, 0.25, 0.1],
        landing_tag_id: 6,
    }
}

/// The baseline with the monitor switched off: Level II flies straight
/// through the Level I hover point.
pub fn crossing_ablation() -> ScenarioConfig {
    ScenarioConfig {
        monitor_enabled: false,
        ..baseline()
    }
}

/// No Level I vehicle in the airspace.
pub fn no_level1() -> ScenarioConfig {
    ScenarioConfig {
        level1_trajectory: Vec::new(),
        ..baseline()
    }
}
