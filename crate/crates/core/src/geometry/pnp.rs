//! Calibrated PnP: linear initialization (plane homography or 3D DLT)
//! followed by Gauss–Newton on the reprojection error.

use nalgebra::{DMatrix, Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use super::homography::{ascending_order, homography_from_points, null_vector};
use super::{exp_so3, nearest_rotation, CameraIntrinsics, Correspondence, GeometryError, Pose};
use crate::Real;

/// Gauss–Newton stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpOptions {
    pub max_iterations: usize,
    /// Stop once the update norm falls below this.
    pub step_tolerance: f64,
    /// Stop once the change in summed squared error (px²) falls below this.
    pub cost_tolerance: f64,
    /// Hitting the iteration cap is only an error when the RMS residual (px)
    /// is still above this.
    pub residual_tolerance_px: f64,
    /// Relative smallest singular value of the centered world points below
    /// which the points are treated as coplanar.
    pub coplanarity_tolerance: f64,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-12,
            residual_tolerance_px: 1.0,
            coplanarity_tolerance: 1e-9,
        }
    }
}

pub fn solve_pnp<T: Real>(
    correspondences: &[Correspondence<T>],
    intrinsics: &CameraIntrinsics<T>,
) -> Result<Pose<T>, GeometryError> {
    solve_pnp_with(correspondences, intrinsics, &PnpOptions::default())
}

pub fn solve_pnp_with<T: Real>(
    correspondences: &[Correspondence<T>],
    intrinsics: &CameraIntrinsics<T>,
    options: &PnpOptions,
) -> Result<Pose<T>, GeometryError> {
    if correspondences.len() < 4 {
        return Err(GeometryError::DegenerateConfiguration(format!(
            "PnP needs at least 4 correspondences, got {}",
            correspondences.len()
        )));
    }
    // Canonical order so the result does not depend on how the input is listed.
    let mut sorted = correspondences.to_vec();
    sorted.sort_by(canonical_order);
    let correspondences = sorted.as_slice();
    let layout = PointLayout::analyze(correspondences, T::lit(options.coplanarity_tolerance))?;
    let normalized: Vec<(T, T)> = correspondences
        .iter()
        .map(|c| intrinsics.normalize(&c.pixel))
        .collect();

    let initial = if layout.planar || correspondences.len() < 6 {
        planar_initialization(correspondences, &normalized, &layout)?
    } else {
        dlt_initialization(correspondences, &normalized)?
    };
    refine(correspondences, intrinsics, initial, options)
}

fn canonical_order<T: Real>(a: &Correspondence<T>, b: &Correspondence<T>) -> std::cmp::Ordering {
    let key = |c: &Correspondence<T>| {
        [c.world.x, c.world.y, c.world.z, c.pixel.u, c.pixel.v].map(|v| v.as_f64())
    };
    (a.tag_id, a.corner_index)
        .cmp(&(b.tag_id, b.corner_index))
        .then_with(|| {
            key(a)
                .iter()
                .zip(key(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// Principal axes of the world points.
struct PointLayout<T: Real> {
    centroid: Vector3<T>,
    /// Rows are the principal directions, largest spread first, right-handed.
    axes: Matrix3<T>,
    planar: bool,
}

impl<T: Real> PointLayout<T> {
    fn analyze(
        correspondences: &[Correspondence<T>],
        coplanar_tol: T,
    ) -> Result<Self, GeometryError> {
        let n = T::from_usize(correspondences.len()).unwrap();
        let centroid = correspondences
            .iter()
            .fold(Vector3::zeros(), |acc, c| acc + c.world.to_vector())
            / n;
        let mut centered = DMatrix::<T>::zeros(correspondences.len(), 3);
        for (i, c) in correspondences.iter().enumerate() {
            let d = c.world.to_vector() - centroid;
            centered.set_row(i, &d.transpose());
        }
        let svd = centered.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| GeometryError::DegenerateConfiguration("SVD failed".into()))?;
        let vals: Vec<T> = svd.singular_values.iter().copied().collect();
        let order = ascending_order(&vals);
        let (s_min, s_mid, s_max) = (vals[order[0]], vals[order[1]], vals[order[2]]);
        if !(s_max > T::zero()) || s_mid <= T::lit(1e-9) * s_max {
            return Err(GeometryError::DegenerateConfiguration(
                "world points are collinear or coincident".into(),
            ));
        }
        let e1: Vector3<T> = v_t
            .row(order[2])
            .transpose()
            .fixed_rows::<3>(0)
            .into_owned();
        let e2: Vector3<T> = v_t
            .row(order[1])
            .transpose()
            .fixed_rows::<3>(0)
            .into_owned();
        let e3 = e1.cross(&e2);
        Ok(Self {
            centroid,
            axes: Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]),
            planar: s_min <= coplanar_tol * s_max,
        })
    }
}

fn planar_initialization<T: Real>(
    correspondences: &[Correspondence<T>],
    normalized: &[(T, T)],
    layout: &PointLayout<T>,
) -> Result<Pose<T>, GeometryError> {
    let plane: Vec<(T, T)> = correspondences
        .iter()
        .map(|c| {
            let local = layout.axes * (c.world.to_vector() - layout.centroid);
            (local.x, local.y)
        })
        .collect();
    let h = homography_from_points(&plane, normalized)?;
    let h1: Vector3<T> = h.column(0).into_owned();
    let h2: Vector3<T> = h.column(1).into_owned();
    let h3: Vector3<T> = h.column(2).into_owned();
    let scale = (h1.norm() + h2.norm()) * T::lit(0.5);
    if !(scale > T::default_epsilon()) {
        return Err(GeometryError::DegenerateConfiguration(
            "homography has vanishing columns".into(),
        ));
    }
    let (mut r1, mut r2, mut t) = (h1 / scale, h2 / scale, h3 / scale);
    // Keep the configuration whose points lie in front of the camera.
    let in_front = plane
        .iter()
        .filter(|&&(a, b)| (r1 * a + r2 * b + t).z > T::zero())
        .count();
    if 2 * in_front < plane.len() {
        r1 = -r1;
        r2 = -r2;
        t = -t;
    }
    let approx = Matrix3::from_columns(&[r1, r2, r1.cross(&r2)]);
    let r_plane = nearest_rotation(&approx).ok_or_else(|| {
        GeometryError::DegenerateConfiguration("rotation projection failed".into())
    })?;
    let rotation = r_plane * layout.axes;
    let translation = t - rotation * layout.centroid;
    Ok(Pose::from_parts_unchecked(rotation, translation))
}

fn dlt_initialization<T: Real>(
    correspondences: &[Correspondence<T>],
    normalized: &[(T, T)],
) -> Result<Pose<T>, GeometryError> {
    let n = correspondences.len();
    let nt = T::from_usize(n).unwrap();

    let centroid = correspondences
        .iter()
        .fold(Vector3::zeros(), |acc, c| acc + c.world.to_vector())
        / nt;
    let mean_dist = correspondences
        .iter()
        .map(|c| (c.world.to_vector() - centroid).norm())
        .fold(T::zero(), |a, b| a + b)
        / nt;
    let s3 = T::lit(3f64.sqrt()) / mean_dist;
    let mut t3 = Matrix4::<T>::identity() * s3;
    t3[(3, 3)] = T::one();
    for i in 0..3 {
        t3[(i, 3)] = -s3 * centroid[i];
    }

    let (su, sv) = normalized
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(u, v)| (a + u, b + v));
    let (mu, mv) = (su / nt, sv / nt);
    let mean_px = normalized
        .iter()
        .map(|&(u, v)| ((u - mu) * (u - mu) + (v - mv) * (v - mv)).sqrt())
        .fold(T::zero(), |a, b| a + b)
        / nt;
    if !(mean_px > T::default_epsilon()) {
        return Err(GeometryError::DegenerateConfiguration(
            "image points coincide".into(),
        ));
    }
    let s2 = T::lit(std::f64::consts::SQRT_2) / mean_px;
    let (z, o) = (T::zero(), T::one());
    let t2 = Matrix3::new(s2, z, -s2 * mu, z, s2, -s2 * mv, z, z, o);

    let mut a = DMatrix::<T>::zeros(2 * n, 12);
    for (i, (c, &(u, v))) in correspondences.iter().zip(normalized).enumerate() {
        let w = c.world.to_vector();
        let xh = t3 * nalgebra::Vector4::new(w.x, w.y, w.z, T::one());
        let un = s2 * (u - mu);
        let vn = s2 * (v - mv);
        for j in 0..4 {
            a[(2 * i, j)] = xh[j];
            a[(2 * i, 8 + j)] = -un * xh[j];
            a[(2 * i + 1, 4 + j)] = xh[j];
            a[(2 * i + 1, 8 + j)] = -vn * xh[j];
        }
    }
    let p = null_vector(a)?;
    let p_norm = nalgebra::Matrix3x4::from_row_slice(p.as_slice());
    let t2_inv = t2.try_inverse().ok_or_else(|| {
        GeometryError::DegenerateConfiguration("normalization not invertible".into())
    })?;
    let mut m = t2_inv * p_norm * t3;
    let mut left: Matrix3<T> = m.fixed_view::<3, 3>(0, 0).into_owned();
    if left.determinant() < T::zero() {
        m = -m;
        left = -left;
    }
    let sv = left.singular_values();
    let scale = (sv[0] + sv[1] + sv[2]) / T::lit(3.0);
    if !(scale > T::default_epsilon()) {
        return Err(GeometryError::DegenerateConfiguration(
            "projection matrix has vanishing rotation block".into(),
        ));
    }
    let rotation = nearest_rotation(&left).ok_or_else(|| {
        GeometryError::DegenerateConfiguration("rotation projection failed".into())
    })?;
    let translation: Vector3<T> = m.column(3).into_owned() / scale;
    Ok(Pose::from_parts_unchecked(rotation, translation))
}

/// Summed squared reprojection error, or `None` if a point falls behind the camera.
fn cost<T: Real>(
    correspondences: &[Correspondence<T>],
    intrinsics: &CameraIntrinsics<T>,
    rotation: &Matrix3<T>,
    translation: &Vector3<T>,
) -> Option<T> {
    let mut total = T::zero();
    for c in correspondences {
        let cam = rotation * c.world.to_vector() + translation;
        if cam.z <= T::lit(super::CAMERA_PLANE_EPS) {
            return None;
        }
        let px = intrinsics.pixel_of(&cam);
        let du = px.u - c.pixel.u;
        let dv = px.v - c.pixel.v;
        total += du * du + dv * dv;
    }
    Some(total)
}

fn refine<T: Real>(
    correspondences: &[Correspondence<T>],
    intrinsics: &CameraIntrinsics<T>,
    initial: Pose<T>,
    options: &PnpOptions,
) -> Result<Pose<T>, GeometryError> {
    let mut rotation = *initial.rotation();
    let mut translation = *initial.translation();
    let mut current =
        cost(correspondences, intrinsics, &rotation, &translation).ok_or_else(|| {
            GeometryError::DegenerateConfiguration(
                "initial pose places points behind the camera".into(),
            )
        })?;
    let (fx, fy, skew) = (intrinsics.fx(), intrinsics.fy(), intrinsics.skew());
    let step_tol = T::lit(options.step_tolerance);
    let cost_tol = T::lit(options.cost_tolerance);

    let mut converged = false;
    for _ in 0..options.max_iterations {
        let mut jtj = Matrix6::<T>::zeros();
        let mut jtr = Vector6::<T>::zeros();
        for c in correspondences {
            let rotated = rotation * c.world.to_vector();
            let cam = rotated + translation;
            let iz = T::one() / cam.z;
            let iz2 = iz * iz;
            let px = intrinsics.pixel_of(&cam);
            let res = [px.u - c.pixel.u, px.v - c.pixel.v];
            let du = Vector3::new(fx * iz, skew * iz, -(fx * cam.x + skew * cam.y) * iz2);
            let dv = Vector3::new(T::zero(), fy * iz, -fy * cam.y * iz2);
            // d(cam)/d(omega) = -[rotated]_x, d(cam)/d(t) = I
            let skew_m = rotated.cross_matrix();
            for (k, dp) in [du, dv].iter().enumerate() {
                let d_omega = -(skew_m.transpose() * dp);
                let row = Vector6::new(d_omega.x, d_omega.y, d_omega.z, dp.x, dp.y, dp.z);
                jtj += row * row.transpose();
                jtr += row * res[k];
            }
        }
        let step = jtj.cholesky().map(|ch| ch.solve(&(-jtr))).ok_or_else(|| {
            GeometryError::DegenerateConfiguration("normal equations are singular".into())
        })?;

        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..12 {
            let scaled = step * alpha;
            let omega = Vector3::new(scaled[0], scaled[1], scaled[2]);
            let r_new = exp_so3(&omega) * rotation;
            let t_new = translation + Vector3::new(scaled[3], scaled[4], scaled[5]);
            if let Some(c_new) = cost(correspondences, intrinsics, &r_new, &t_new) {
                if c_new <= current {
                    accepted = Some((r_new, t_new, c_new, scaled.norm()));
                    break;
                }
            }
            alpha *= T::lit(0.5);
        }
        let Some((r_new, t_new, c_new, step_norm)) = accepted else {
            // No descent direction left: already at the minimum to working precision.
            converged = true;
            break;
        };
        let change = current - c_new;
        rotation = r_new;
        translation = t_new;
        current = c_new;
        if step_norm < step_tol || change < cost_tol {
            converged = true;
            break;
        }
    }

    let rms = (current / T::from_usize(correspondences.len()).unwrap()).sqrt();
    if !converged && rms.as_f64() > options.residual_tolerance_px {
        return Err(GeometryError::NoConvergence {
            iterations: options.max_iterations,
            rms_px: rms.as_f64(),
        });
    }
    // Re-project onto SO(3) to shed accumulated round-off.
    let rotation = nearest_rotation(&rotation).unwrap_or(rotation);
    Ok(Pose::from_parts_unchecked(rotation, translation))
}
