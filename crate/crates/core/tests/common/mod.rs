#![allow(dead_code)]

use landing_core::geometry::tags::{wall_layout, TagSpec};
use landing_core::sim::forward_camera_rotation;
use landing_core::{CameraIntrinsics, Pose, WorldPoint};
use nalgebra::Vector3;
use rand::Rng;

/// The six-tag wall used by the baseline scenario.
pub fn wall() -> Vec<TagSpec> {
    wall_layout(4.0, 0.6, 2.0, [0.4, 2.4])
}

pub fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(1000.0, 1000.0, 640.0, 480.0).unwrap()
}

/// Camera somewhere in front of the wall, roughly facing it.
pub fn random_wall_pose<R: Rng>(rng: &mut R) -> Pose {
    let center = WorldPoint::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(0.0..2.5),
        rng.random_range(0.6..1.8),
    );
    let tilt = Vector3::new(
        rng.random_range(-0.25..0.25),
        rng.random_range(-0.25..0.25),
        rng.random_range(-0.25..0.25),
    );
    let r = nalgebra::Rotation3::from_scaled_axis(tilt).into_inner() * forward_camera_rotation();
    Pose::from_center(r, &center).unwrap()
}

/// Axis-angle rotation with angle below `max_angle`, plus translation.
pub fn random_pose<R: Rng>(rng: &mut R, max_angle: f64, translation: Vector3<f64>) -> Pose {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
    .normalize();
    Pose::from_axis_angle(axis * rng.random_range(0.0..max_angle), translation)
}
