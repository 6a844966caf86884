//! Closed-form intrinsics from several views of a planar target.
//!
//! Each view contributes a plane→image homography `H = λ·A·[r1 r2 t]`. The
//! orthonormality of `r1, r2` gives two linear constraints on the image of
//! the absolute conic `B = A⁻ᵀA⁻¹`, and `A` is read back from `B` in closed
//! form. Skew is estimated, not forced to zero.

use nalgebra::{DMatrix, Matrix3};

use super::homography::{ascending_order, estimate_homography, rank_tolerance};
use super::{CameraIntrinsics, Correspondence, GeometryError};
use crate::Real;

/// Row `v_ij` of the conic constraint system for homography columns `i`, `j`.
fn conic_row<T: Real>(h: &Matrix3<T>, i: usize, j: usize) -> [T; 6] {
    let hi = h.column(i);
    let hj = h.column(j);
    [
        hi[0] * hj[0],
        hi[0] * hj[1] + hi[1] * hj[0],
        hi[1] * hj[1],
        hi[2] * hj[0] + hi[0] * hj[2],
        hi[2] * hj[1] + hi[1] * hj[2],
        hi[2] * hj[2],
    ]
}

pub fn calibrate_intrinsics<T: Real>(
    views: &[Vec<Correspondence<T>>],
) -> Result<CameraIntrinsics<T>, GeometryError> {
    if views.len() < 3 {
        return Err(GeometryError::InsufficientViews(views.len()));
    }

    // Condition pixel coordinates: K' = N·K keeps K' upper-triangular.
    let (mut su, mut sv, mut count) = (T::zero(), T::zero(), 0usize);
    for c in views.iter().flatten() {
        su += c.pixel.u;
        sv += c.pixel.v;
        count += 1;
    }
    let n = T::from_usize(count.max(1)).unwrap();
    let (mu, mv) = (su / n, sv / n);
    let spread = views
        .iter()
        .flatten()
        .map(|c| (c.pixel.u - mu).abs().max((c.pixel.v - mv).abs()))
        .fold(T::zero(), |a, b| a.max(b));
    let s = if spread > T::zero() {
        T::one() / spread
    } else {
        T::one()
    };
    let (z, o) = (T::zero(), T::one());
    let cond = Matrix3::new(s, z, -s * mu, z, s, -s * mv, z, z, o);

    let mut system = DMatrix::<T>::zeros(2 * views.len(), 6);
    for (k, view) in views.iter().enumerate() {
        let h = cond * estimate_homography(view)?;
        let h = h / h.norm();
        let v12 = conic_row(&h, 0, 1);
        let v11 = conic_row(&h, 0, 0);
        let v22 = conic_row(&h, 1, 1);
        for j in 0..6 {
            system[(2 * k, j)] = v12[j];
            system[(2 * k + 1, j)] = v11[j] - v22[j];
        }
    }

    let svd = system.svd(false, true);
    let v_t = svd.v_t.ok_or(GeometryError::DegenerateMotion)?;
    let sv_vals: Vec<T> = svd.singular_values.iter().copied().collect();
    let order = ascending_order(&sv_vals);
    let largest = sv_vals[order[order.len() - 1]];
    // With fewer than 6 rows the SVD only returns min(rows, 6) vectors.
    if sv_vals.len() < 6 || sv_vals[order[1]] < rank_tolerance::<T>() * largest {
        return Err(GeometryError::DegenerateMotion);
    }
    let b = v_t.row(order[0]);
    let (b11, b12, b22, b13, b23, b33) = (b[0], b[1], b[2], b[3], b[4], b[5]);

    let denom = b11 * b22 - b12 * b12;
    if denom.abs() <= T::default_epsilon() || b11.abs() <= T::default_epsilon() {
        return Err(GeometryError::DegenerateMotion);
    }
    let v0 = (b12 * b13 - b11 * b23) / denom;
    let lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
    let alpha_sq = lambda / b11;
    let beta_sq = lambda * b11 / denom;
    if !(alpha_sq > T::zero()) || !(beta_sq > T::zero()) {
        return Err(GeometryError::DegenerateMotion);
    }
    let alpha = alpha_sq.sqrt();
    let beta = beta_sq.sqrt();
    let gamma = -b12 * alpha * alpha * beta / lambda;
    let u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;

    let conditioned = Matrix3::new(alpha, gamma, u0, z, beta, v0, z, z, o);
    let cond_inv = cond.try_inverse().ok_or(GeometryError::DegenerateMotion)?;
    let k = cond_inv * conditioned;
    CameraIntrinsics::with_skew(k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)], k[(0, 1)])
}
