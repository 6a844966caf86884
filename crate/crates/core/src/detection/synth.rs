//! Synthetic stand-in for the neural detector: projects the target's body
//! box and emits a noisy detection plus lower-confidence duplicates.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BoundingBox, Detection, DetectionFrame};
use crate::geometry::{project, CameraIntrinsics, Pose, WorldPoint, CAMERA_PLANE_EPS};

/// Duplicate confidences are drawn uniformly from this range.
pub const DUPLICATE_CONFIDENCE: (f64, f64) = (0.3, 0.9);
/// Duplicates are offset by up to this fraction of the box size.
const DUPLICATE_JITTER: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("target is behind the observing camera")]
    TargetBehindCamera,
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub center_sigma_px: f64,
    pub size_sigma_px: f64,
    pub duplicate_count: u32,
    pub dropout_prob: f64,
    /// Pixel noise on observed tag corners.
    pub pixel_noise_sigma: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            center_sigma_px: 2.0,
            size_sigma_px: 3.0,
            duplicate_count: 2,
            dropout_prob: 0.0,
            pixel_noise_sigma: 0.5,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            center_sigma_px: 0.0,
            size_sigma_px: 0.0,
            duplicate_count: 0,
            dropout_prob: 0.0,
            pixel_noise_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DetectionError> {
        let sigmas = [
            self.center_sigma_px,
            self.size_sigma_px,
            self.pixel_noise_sigma,
        ];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(DetectionError::InvalidNoise(
                "sigmas must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(DetectionError::InvalidNoise(
                "dropout_prob must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Pixel hull of the target's body box as seen by the observer.
///
/// `target` maps body coordinates into the world (`X_w = R·X_b + t`);
/// `observer` is the usual world→camera pose.
pub fn projected_hull(
    target: &Pose,
    observer: &Pose,
    intrinsics: &CameraIntrinsics,
    half_extents: &Vector3<f64>,
) -> Result<BoundingBox, DetectionError> {
    let (mut min_u, mut min_v) = (f64::INFINITY, f64::INFINITY);
    let (mut max_u, mut max_v) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..8 {
        let sign = |bit: usize| if i & bit == 0 { -1.0 } else { 1.0 };
        let body = Vector3::new(
            sign(1) * half_extents.x,
            sign(2) * half_extents.y,
            sign(4) * half_extents.z,
        );
        let world = WorldPoint::from_vector(&(target.rotation() * body + target.translation()));
        if observer.transform(&world).z <= CAMERA_PLANE_EPS {
            return Err(DetectionError::TargetBehindCamera);
        }
        let px = project(&world, observer, intrinsics)
            .map_err(|_| DetectionError::TargetBehindCamera)?
            .pixel;
        min_u = min_u.min(px.u);
        min_v = min_v.min(px.v);
        max_u = max_u.max(px.u);
        max_v = max_v.max(px.v);
    }
    Ok(BoundingBox::from_extents(min_u, min_v, max_u, max_v))
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("validated sigma")
}

/// One detector frame at time `t`. Deterministic for a given RNG state.
#[allow(clippy::too_many_arguments)]
pub fn synth_detect<R: Rng + ?Sized>(
    t: f64,
    target: &Pose,
    observer: &Pose,
    intrinsics: &CameraIntrinsics,
    half_extents: &Vector3<f64>,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<DetectionFrame, DetectionError> {
    noise.validate()?;
    let truth = projected_hull(target, observer, intrinsics, half_extents)?;
    if noise.dropout_prob > 0.0 && rng.random::<f64>() < noise.dropout_prob {
        return Ok(DetectionFrame::empty(t));
    }
    let center = normal(noise.center_sigma_px);
    let size = normal(noise.size_sigma_px);
    let main = BoundingBox::new(
        truth.x + center.sample(rng),
        truth.y + center.sample(rng),
        (truth.w + size.sample(rng)).max(0.0),
        (truth.h + size.sample(rng)).max(0.0),
    );
    let mut detections = Vec::with_capacity(1 + noise.duplicate_count as usize);
    detections.push(Detection::new(main, 1.0));
    for _ in 0..noise.duplicate_count {
        let j = DUPLICATE_JITTER;
        let dup = BoundingBox::new(
            main.x + main.w * rng.random_range(-j..=j),
            main.y + main.h * rng.random_range(-j..=j),
            main.w * (1.0 + rng.random_range(-j..=j)),
            main.h * (1.0 + rng.random_range(-j..=j)),
        );
        let conf = rng.random_range(DUPLICATE_CONFIDENCE.0..=DUPLICATE_CONFIDENCE.1);
        detections.push(Detection::new(dup, conf));
    }
    if detections.len() > 1 {
        let slot = rng.random_range(0..detections.len());
        detections.swap(0, slot);
    }
    Ok(DetectionFrame::new(t, detections))
}
