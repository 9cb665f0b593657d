//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the toolkit: `f32` or `f64`.
///
/// Linear algebra goes through `nalgebra`, so the bound is `RealField`; the
/// `num-traits` conversions cover literals and reporting.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Converts a count or index into this scalar.
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Positive infinity.
    #[inline]
    fn infinity() -> Self {
        Self::of(f64::INFINITY)
    }
}

impl Real for f32 {}
impl Real for f64 {}
