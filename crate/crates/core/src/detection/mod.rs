//! Detection post-processing: the `[x, y, w, h]` box, IoU, the confidence
//! pre-filter and greedy non-maximum suppression.

pub(crate) mod synth;

pub use synth::{projected_hull, synth_detect, DetectionError, NoiseSpec, DUPLICATE_CONFIDENCE};

use serde::{Deserialize, Serialize};

use crate::Real;

/// Paper-default confidence threshold for the pre-filter (strict `>`).
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;
/// Paper-default IoU threshold for suppression (strict `>`).
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.4;

/// Axis-aligned box with `(x, y)` at its center, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<T: Real = f64> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Real> BoundingBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        debug_assert!(w >= T::zero() && h >= T::zero());
        Self { x, y, w, h }
    }

    /// Box spanning the given corner extents.
    pub fn from_extents(min_u: T, min_v: T, max_u: T, max_v: T) -> Self {
        let two = T::lit(2.0);
        Self {
            x: (min_u + max_u) / two,
            y: (min_v + max_v) / two,
            w: max_u - min_u,
            h: max_v - min_v,
        }
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    /// `(min_u, min_v, max_u, max_v)`.
    pub fn extents(&self) -> (T, T, T, T) {
        let two = T::lit(2.0);
        let (hw, hh) = (self.w / two, self.h / two);
        (self.x - hw, self.y - hh, self.x + hw, self.y + hh)
    }

    pub fn is_valid(&self) -> bool {
        let finite =
            self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite();
        finite && self.w >= T::zero() && self.h >= T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection<T: Real = f64> {
    #[serde(rename = "box")]
    pub bbox: BoundingBox<T>,
    /// Confidence score in `[0, 1]`.
    pub confidence: T,
    pub class_id: u32,
}

impl<T: Real> Detection<T> {
    pub fn new(bbox: BoundingBox<T>, confidence: T) -> Self {
        debug_assert!(confidence >= T::zero() && confidence <= T::one());
        Self {
            bbox,
            confidence,
            class_id: 0,
        }
    }
}

/// All predictions produced for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame<T: Real = f64> {
    /// Simulation time in seconds.
    pub t: T,
    pub detections: Vec<Detection<T>>,
}

impl<T: Real> DetectionFrame<T> {
    pub fn new(t: T, detections: Vec<Detection<T>>) -> Self {
        Self { t, detections }
    }

    pub fn empty(t: T) -> Self {
        Self::new(t, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Intersection over union; `0` when the union is empty.
pub fn iou<T: Real>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let (ax0, ay0, ax1, ay1) = a.extents();
    let (bx0, by0, bx1, by1) = b.extents();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(T::zero());
    let ih = (ay1.min(by1) - ay0.max(by0)).max(T::zero());
    let inter = iw * ih;
    // Areas from the same extents as the intersection so iou(a, a) is exactly 1.
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one())
}

/// Keeps detections with confidence strictly above `threshold`, in order.
pub fn confidence_filter<T: Real>(frame: &DetectionFrame<T>, threshold: T) -> DetectionFrame<T> {
    DetectionFrame {
        t: frame.t,
        detections: frame
            .detections
            .iter()
            .filter(|d| d.confidence > threshold)
            .copied()
            .collect(),
    }
}

/// Greedy NMS: take the most confident remaining detection, drop everything
/// overlapping it by IoU strictly above `iou_threshold`, repeat.
///
/// Equal confidences keep their frame order. Class ids are ignored.
pub fn nms<T: Real>(frame: &DetectionFrame<T>, iou_threshold: T) -> DetectionFrame<T> {
    let mut order: Vec<usize> = (0..frame.detections.len()).collect();
    // Stable sort: ties stay in frame order.
    order.sort_by(|&a, &b| {
        frame.detections[b]
            .confidence
            .partial_cmp(&frame.detections[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut suppressed = vec![false; order.len()];
    let mut kept = Vec::new();
    for i in 0..order.len() {
        if suppressed[i] {
            continue;
        }
        let chosen = frame.detections[order[i]];
        kept.push(chosen);
        for j in i + 1..order.len() {
            if !suppressed[j] && iou(&chosen.bbox, &frame.detections[order[j]].bbox) > iou_threshold
            {
                suppressed[j] = true;
            }
        }
    }
    DetectionFrame {
        t: frame.t,
        detections: kept,
    }
}
