use nalgebra::{DMatrix, Matrix3};

use super::{Correspondence, GeometryError};
use crate::Real;

/// Similarity transform moving the centroid to the origin with mean
/// distance √2 (Hartley normalization).
fn normalizing_transform<T: Real>(points: &[(T, T)]) -> Result<Matrix3<T>, GeometryError> {
    let n = T::from_usize(points.len()).unwrap();
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(ax, ay), &(x, y)| (ax + x, ay + y));
    let (mx, my) = (sx / n, sy / n);
    let mean_dist = points
        .iter()
        .map(|&(x, y)| ((x - mx) * (x - mx) + (y - my) * (y - my)).sqrt())
        .fold(T::zero(), |a, d| a + d)
        / n;
    if !(mean_dist > T::default_epsilon()) {
        return Err(GeometryError::DegenerateConfiguration(
            "points coincide".into(),
        ));
    }
    let s = T::lit(std::f64::consts::SQRT_2) / mean_dist;
    let (z, o) = (T::zero(), T::one());
    Ok(Matrix3::new(s, z, -s * mx, z, s, -s * my, z, z, o))
}

fn apply<T: Real>(m: &Matrix3<T>, (x, y): (T, T)) -> (T, T) {
    let w = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)];
    (
        (m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)]) / w,
        (m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)]) / w,
    )
}

/// Index order of `values` from smallest to largest.
pub(crate) fn ascending_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

/// Relative singular-value floor below which a direction counts as a null direction.
pub(crate) fn rank_tolerance<T: Real>() -> T {
    T::default_epsilon().sqrt()
}

/// Unit null vector of `a` (rows may be fewer than columns), rejecting
/// systems whose null space is more than one-dimensional.
pub(crate) fn null_vector<T: Real>(a: DMatrix<T>) -> Result<nalgebra::DVector<T>, GeometryError> {
    let cols = a.ncols();
    let a = if a.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(&a);
        padded
    } else {
        a
    };
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| GeometryError::DegenerateConfiguration("SVD failed".into()))?;
    let sv: Vec<T> = svd.singular_values.iter().copied().collect();
    let order = ascending_order(&sv);
    let largest = sv[order[order.len() - 1]];
    if !(largest > T::zero()) || sv[order[1]] < rank_tolerance::<T>() * largest {
        return Err(GeometryError::DegenerateConfiguration(
            "constraint system is rank deficient".into(),
        ));
    }
    Ok(v_t.row(order[0]).transpose())
}

/// DLT homography mapping `src` plane coordinates to `dst` coordinates.
///
/// Both point sets are Hartley-normalized before the solve. The result is
/// scaled so that `H[2,2] = 1` when that entry is not vanishing, and to unit
/// Frobenius norm otherwise.
pub fn homography_from_points<T: Real>(
    src: &[(T, T)],
    dst: &[(T, T)],
) -> Result<Matrix3<T>, GeometryError> {
    if src.len() != dst.len() {
        return Err(GeometryError::DegenerateConfiguration(
            "source and destination sizes differ".into(),
        ));
    }
    if src.len() < 4 {
        return Err(GeometryError::DegenerateConfiguration(format!(
            "need at least 4 points, got {}",
            src.len()
        )));
    }
    let t_src = normalizing_transform(src)?;
    let t_dst = normalizing_transform(dst)?;

    let n = src.len();
    let mut a = DMatrix::<T>::zeros(2 * n, 9);
    for (i, (&s, &d)) in src.iter().zip(dst).enumerate() {
        let (x, y) = apply(&t_src, s);
        let (u, v) = apply(&t_dst, d);
        let o = T::one();
        let r0 = [-x, -y, -o, T::zero(), T::zero(), T::zero(), u * x, u * y, u];
        let r1 = [T::zero(), T::zero(), T::zero(), -x, -y, -o, v * x, v * y, v];
        for j in 0..9 {
            a[(2 * i, j)] = r0[j];
            a[(2 * i + 1, j)] = r1[j];
        }
    }
    let h = null_vector(a)?;
    let h_norm = Matrix3::from_row_slice(h.as_slice());
    let t_dst_inv = t_dst.try_inverse().ok_or_else(|| {
        GeometryError::DegenerateConfiguration("normalization not invertible".into())
    })?;
    let mut hm = t_dst_inv * h_norm * t_src;
    let scale = hm.norm();
    if hm[(2, 2)].abs() > T::default_epsilon() * scale {
        hm /= hm[(2, 2)];
    } else {
        hm /= scale;
    }
    Ok(hm)
}

/// Homography from the `z = 0` plane of the world frame to pixels.
pub fn estimate_homography<T: Real>(
    correspondences: &[Correspondence<T>],
) -> Result<Matrix3<T>, GeometryError> {
    let extent = correspondences
        .iter()
        .map(|c| c.world.x.abs().max(c.world.y.abs()))
        .fold(T::one(), |a, b| a.max(b));
    if correspondences
        .iter()
        .any(|c| c.world.z.abs() > T::lit(1e-9) * extent)
    {
        return Err(GeometryError::DegenerateConfiguration(
            "world points are not on the z = 0 plane".into(),
        ));
    }
    let src: Vec<(T, T)> = correspondences
        .iter()
        .map(|c| (c.world.x, c.world.y))
        .collect();
    let dst: Vec<(T, T)> = correspondences
        .iter()
        .map(|c| (c.pixel.u, c.pixel.v))
        .collect();
    homography_from_points(&src, &dst)
}
