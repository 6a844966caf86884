//! Core library for vision-based multi-UAV landing deconfliction.
//!
//! A lower-priority (Level II) vehicle localizes itself from fiducial-marker
//! corners, watches a higher-priority (Level I) vehicle through a stream of
//! bounding boxes, hovers while it lands, and proceeds to its own landing
//! zone once the tracked box jumps by more than a pixel threshold.
//!
//! * [`geometry`]: pinhole projection, homography, PnP and planar calibration.
//! * [`detection`]: boxes, IoU, confidence filtering, NMS and a synthetic detector.
//! * [`monitor`]: the landing monitor state machine.
//! * [`guidance`]: proportional velocity commands and transport delay.
//! * [`sim`]: scenarios, the tick loop, replay and file formats.
//!
//! Geometry and detection types are generic over [`Real`] and default to
//! `f64`; the aliases below name the concrete instantiations.

// `!(x > y)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod geometry;
pub mod guidance;
pub mod monitor;
mod scalar;
pub mod sim;

pub use scalar::Real;

pub use detection::{confidence_filter, iou, nms, BoundingBox, Detection, DetectionFrame};
pub use geometry::{
    calibrate_intrinsics, estimate_homography, project, solve_pnp, CameraIntrinsics,
    Correspondence, GeometryError, PixelPoint, Pose, ProjectionResult, WorldPoint,
};

pub type Intrinsics32 = geometry::CameraIntrinsics<f32>;
pub type Intrinsics64 = geometry::CameraIntrinsics<f64>;
pub type Pose32 = geometry::Pose<f32>;
pub type Pose64 = geometry::Pose<f64>;
pub type WorldPoint32 = geometry::WorldPoint<f32>;
pub type WorldPoint64 = geometry::WorldPoint<f64>;
pub type PixelPoint32 = geometry::PixelPoint<f32>;
pub type PixelPoint64 = geometry::PixelPoint<f64>;
pub type Correspondence32 = geometry::Correspondence<f32>;
pub type Correspondence64 = geometry::Correspondence<f64>;
pub type BoundingBox32 = detection::BoundingBox<f32>;
pub type BoundingBox64 = detection::BoundingBox<f64>;
pub type Detection32 = detection::Detection<f32>;
pub type Detection64 = detection::Detection<f64>;
pub type DetectionFrame32 = detection::DetectionFrame<f32>;
pub type DetectionFrame64 = detection::DetectionFrame<f64>;
