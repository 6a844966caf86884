//! Pinhole camera geometry: projection `s·p = A·[R|t]·P_w`, planar
//! homographies, PnP pose recovery and closed-form intrinsics calibration.
//!
//! Conventions: the image origin is the top-left pixel, `u` grows to the
//! right and `v` grows downward. A [`Pose`] maps world coordinates into the
//! camera frame (`X_c = R·X_w + t`), and the camera looks along `+z_c`.

mod calibration;
mod homography;
mod pnp;
pub mod tags;

pub use calibration::calibrate_intrinsics;
pub use homography::{estimate_homography, homography_from_points};
pub use pnp::{solve_pnp, solve_pnp_with, PnpOptions};

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

/// Camera-frame depths smaller than this are treated as lying on the camera plane.
pub const CAMERA_PLANE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point lies on the camera plane (camera-frame z = {z:e})")]
    PointAtCameraPlane { z: f64 },
    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("pose refinement did not converge after {iterations} iterations (rms {rms_px} px)")]
    NoConvergence { iterations: usize, rms_px: f64 },
    #[error("calibration needs at least 3 views, got {0}")]
    InsufficientViews(usize),
    #[error("views do not constrain the intrinsics (pure translation or identical views)")]
    DegenerateMotion,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("rotation is not orthonormal with positive determinant")]
    InvalidRotation,
}

/// Intrinsic matrix `A = [[fx, skew, cx], [0, fy, cy], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics<T>", into = "RawIntrinsics<T>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct CameraIntrinsics<T: Real = f64> {
    fx: T,
    fy: T,
    cx: T,
    cy: T,
    skew: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct RawIntrinsics<T> {
    fx: T,
    fy: T,
    cx: T,
    cy: T,
    #[serde(default = "zero_skew")]
    skew: T,
}

fn zero_skew<T: Real>() -> T {
    T::zero()
}

impl<T: Real> TryFrom<RawIntrinsics<T>> for CameraIntrinsics<T> {
    type Error = GeometryError;

    fn try_from(raw: RawIntrinsics<T>) -> Result<Self, Self::Error> {
        Self::with_skew(raw.fx, raw.fy, raw.cx, raw.cy, raw.skew)
    }
}

impl<T: Real> From<CameraIntrinsics<T>> for RawIntrinsics<T> {
    fn from(k: CameraIntrinsics<T>) -> Self {
        RawIntrinsics {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            skew: k.skew,
        }
    }
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Result<Self, GeometryError> {
        Self::with_skew(fx, fy, cx, cy, T::zero())
    }

    pub fn with_skew(fx: T, fy: T, cx: T, cy: T, skew: T) -> Result<Self, GeometryError> {
        let finite = [fx, fy, cx, cy, skew].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidIntrinsics("non-finite entry".into()));
        }
        if fx <= T::zero() || fy <= T::zero() {
            return Err(GeometryError::InvalidIntrinsics(
                "focal lengths must be positive".into(),
            ));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            skew,
        })
    }

    /// Reads the intrinsics back out of an upper-triangular matrix with unit
    /// bottom-right entry.
    pub fn from_matrix(m: &Matrix3<T>) -> Result<Self, GeometryError> {
        let tol = T::lit(1e-9);
        if m[(1, 0)].abs() > tol
            || m[(2, 0)].abs() > tol
            || m[(2, 1)].abs() > tol
            || (m[(2, 2)] - T::one()).abs() > tol
        {
            return Err(GeometryError::InvalidIntrinsics(
                "matrix is not upper-triangular with unit corner".into(),
            ));
        }
        Self::with_skew(m[(0, 0)], m[(1, 1)], m[(0, 2)], m[(1, 2)], m[(0, 1)])
    }

    pub fn fx(&self) -> T {
        self.fx
    }
    pub fn fy(&self) -> T {
        self.fy
    }
    pub fn cx(&self) -> T {
        self.cx
    }
    pub fn cy(&self) -> T {
        self.cy
    }
    pub fn skew(&self) -> T {
        self.skew
    }

    pub fn matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(self.fx, self.skew, self.cx, z, self.fy, self.cy, z, z, o)
    }

    pub fn inverse_matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        let ifx = o / self.fx;
        let ify = o / self.fy;
        let s = -self.skew * ifx * ify;
        Matrix3::new(
            ifx,
            s,
            -self.cx * ifx - self.cy * s,
            z,
            ify,
            -self.cy * ify,
            z,
            z,
            o,
        )
    }

    /// Maps a pixel to normalized image coordinates `A⁻¹·[u, v, 1]`.
    pub fn normalize(&self, pixel: &PixelPoint<T>) -> (T, T) {
        let y = (pixel.v - self.cy) / self.fy;
        let x = (pixel.u - self.cx - self.skew * y) / self.fx;
        (x, y)
    }

    /// Pixel of a camera-frame point. The caller guarantees `z ≠ 0`.
    fn pixel_of(&self, cam: &Vector3<T>) -> PixelPoint<T> {
        let x = cam.x / cam.z;
        let y = cam.y / cam.z;
        PixelPoint::new(self.fx * x + self.skew * y + self.cx, self.fy * y + self.cy)
    }
}

/// Rigid world→camera transform `X_c = R·X_w + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real = f64> {
    rotation: Matrix3<T>,
    translation: Vector3<T>,
}

impl<T: Real> Pose<T> {
    /// Builds a pose, rejecting rotations that are not in SO(3).
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self, GeometryError> {
        let tol = T::rotation_tolerance();
        let ortho = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        let det = rotation.determinant();
        if !(ortho <= tol) || !((det - T::one()).abs() <= tol) {
            return Err(GeometryError::InvalidRotation);
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidRotation);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation from an axis-angle vector (direction = axis, norm = angle in radians).
    pub fn from_axis_angle(axis_angle: Vector3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation: exp_so3(&axis_angle),
            translation,
        }
    }

    /// Pose of a camera centered at `center` (world frame) with the given
    /// world→camera rotation.
    pub fn from_center(
        rotation: Matrix3<T>,
        center: &WorldPoint<T>,
    ) -> Result<Self, GeometryError> {
        let t = -(rotation * center.to_vector());
        Self::new(rotation, t)
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    /// 3×4 matrix `[R | t]`.
    pub fn matrix(&self) -> nalgebra::Matrix3x4<T> {
        let mut m = nalgebra::Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.set_column(3, &self.translation);
        m
    }

    pub fn transform(&self, p: &WorldPoint<T>) -> Vector3<T> {
        self.rotation * p.to_vector() + self.translation
    }

    /// Camera center in world coordinates, `-Rᵀ·t`.
    pub fn camera_center(&self) -> WorldPoint<T> {
        WorldPoint::from_vector(&-(self.rotation.transpose() * self.translation))
    }

    pub fn axis_angle(&self) -> Vector3<T> {
        log_so3(&self.rotation)
    }

    /// Geodesic angle between the two rotations, in radians.
    pub fn rotation_error(&self, other: &Pose<T>) -> T {
        let rel = self.rotation * other.rotation.transpose();
        log_so3(&rel).norm()
    }

    pub fn translation_error(&self, other: &Pose<T>) -> T {
        (self.translation - other.translation).norm()
    }
}

pub(crate) fn exp_so3<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let angle = w.norm();
    if angle <= T::default_epsilon() {
        let mut m = Matrix3::identity();
        m[(0, 1)] = -w.z;
        m[(0, 2)] = w.y;
        m[(1, 0)] = w.z;
        m[(1, 2)] = -w.x;
        m[(2, 0)] = -w.y;
        m[(2, 1)] = w.x;
        return m;
    }
    Rotation3::from_axis_angle(&Unit::new_unchecked(w / angle), angle).into_inner()
}

pub(crate) fn log_so3<T: Real>(r: &Matrix3<T>) -> Vector3<T> {
    let half = T::lit(0.5);
    let w = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * half;
    let sin = w.norm();
    let cos = (r.trace() - T::one()) * half;
    let angle = sin.atan2(cos);
    if sin <= T::default_epsilon() {
        if cos > T::zero() {
            return w;
        }
        // Half-turn: the antisymmetric part vanishes.
        return Rotation3::from_matrix_eps(r, T::default_epsilon(), 100, Rotation3::identity())
            .scaled_axis();
    }
    w * (angle / sin)
}

/// Nearest rotation in the Frobenius sense.
pub(crate) fn nearest_rotation<T: Real>(m: &Matrix3<T>) -> Option<Matrix3<T>> {
    let svd = m.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let mut r = u * v_t;
    if r.determinant() < T::zero() {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -T::one();
        r = u * d * v_t;
    }
    Some(r)
}

/// A point in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct WorldPoint<T: Real = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> WorldPoint<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<T>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.to_vector() - other.to_vector()).norm()
    }
}

impl<T: Real> From<[T; 3]> for WorldPoint<T> {
    fn from(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Real> From<WorldPoint<T>> for [T; 3] {
    fn from(p: WorldPoint<T>) -> Self {
        [p.x, p.y, p.z]
    }
}

/// A pixel location; may lie outside the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct PixelPoint<T: Real = f64> {
    pub u: T,
    pub v: T,
}

impl<T: Real> PixelPoint<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Self) -> T {
        let du = self.u - other.u;
        let dv = self.v - other.v;
        (du * du + dv * dv).sqrt()
    }
}

impl<T: Real> From<[T; 2]> for PixelPoint<T> {
    fn from(a: [T; 2]) -> Self {
        Self::new(a[0], a[1])
    }
}

impl<T: Real> From<PixelPoint<T>> for [T; 2] {
    fn from(p: PixelPoint<T>) -> Self {
        [p.u, p.v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResult<T: Real = f64> {
    pub pixel: PixelPoint<T>,
    /// Camera-frame `z` of the point (the factor `s`).
    pub depth_scale: T,
}

/// A known world point and where it was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence<T: Real = f64> {
    pub world: WorldPoint<T>,
    pub pixel: PixelPoint<T>,
    pub tag_id: u32,
    /// Corner index in `0..4`.
    pub corner_index: u8,
}

impl<T: Real> Correspondence<T> {
    pub fn new(world: WorldPoint<T>, pixel: PixelPoint<T>, tag_id: u32, corner_index: u8) -> Self {
        debug_assert!(corner_index < 4);
        Self {
            world,
            pixel,
            tag_id,
            corner_index,
        }
    }
}

/// Projects a world point through `A·[R|t]` and dehomogenizes.
pub fn project<T: Real>(
    point: &WorldPoint<T>,
    pose: &Pose<T>,
    intrinsics: &CameraIntrinsics<T>,
) -> Result<ProjectionResult<T>, GeometryError> {
    let cam = pose.transform(point);
    if cam.z.abs() < T::lit(CAMERA_PLANE_EPS) {
        return Err(GeometryError::PointAtCameraPlane { z: cam.z.as_f64() });
    }
    Ok(ProjectionResult {
        pixel: intrinsics.pixel_of(&cam),
        depth_scale: cam.z,
    })
}

/// Sum of squared reprojection errors and the per-point mean error, in pixels.
pub fn reprojection_error<T: Real>(
    correspondences: &[Correspondence<T>],
    pose: &Pose<T>,
    intrinsics: &CameraIntrinsics<T>,
) -> Result<(T, T), GeometryError> {
    let mut sum_sq = T::zero();
    let mut sum = T::zero();
    for c in correspondences {
        let p = project(&c.world, pose, intrinsics)?;
        let d = p.pixel.distance(&c.pixel);
        sum_sq += d * d;
        sum += d;
    }
    let n = T::from_usize(correspondences.len().max(1)).unwrap();
    Ok((sum_sq, sum / n))
}
