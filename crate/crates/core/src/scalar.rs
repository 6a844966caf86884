//! Scalar abstraction shared by the geometry and detection code.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by every generic routine in this crate.
///
/// Implemented for `f32` and `f64`. The simulator itself runs in `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion into `f64`, used when reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for orthonormality checks on rotations.
    ///
    /// `1e-9` for `f64`; scaled up from machine epsilon for narrower types.
    fn rotation_tolerance() -> Self {
        let eps = Self::default_epsilon();
        let floor = Self::lit(1e-9);
        let scaled = eps * Self::lit(1e4);
        if scaled > floor {
            scaled
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
