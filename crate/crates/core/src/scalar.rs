//! Scalar abstraction for the closed-form layers.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the closed-form layers are generic over.
///
/// Implemented for `f32` and `f64`. The stated accuracy contracts
/// (1e-10 .. 1e-12 relative) are `f64` statements; `f32` degrades
/// gracefully to its own precision.
pub trait FloatScalar:
    Float + FloatConst + FromPrimitive + core::fmt::Debug + core::fmt::Display + 'static
{
    /// Euler–Mascheroni constant at this scalar's precision.
    #[inline]
    fn euler_mascheroni() -> Self {
        Self::from_f64(crate::specfun::EULER_MASCHERONI).unwrap()
    }

    /// Lossy view of the value as `f64`, for diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl FloatScalar for f32 {}
impl FloatScalar for f64 {}
