//! Scalar abstraction for the numerical core.
//!
//! All transfer functions, density-evolution state and mapping fractions are
//! generic over [`Scalar`], so the same machinery runs in `f32` or `f64`.
//! The crate-root aliases fix `f64` as the default; `f32` is mostly useful
//! for quick exploratory sweeps where the reduced dynamic range of the
//! check-node transfer function is acceptable.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the numerical core.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Converts from `f64`, rounding to the nearest representable value.
    fn of(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    /// Widens to `f64` (exact for `f32`/`f64`).
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum<T> + Debug + Display + Send + Sync + 'static
{
}

/// Shorthand conversion from an `f64` constant into the working scalar.
#[inline]
pub fn sc<R: Scalar>(v: f64) -> R {
    R::of(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        let x: f32 = Scalar::of(0.25);
        assert_eq!(x, 0.25f32);
        assert_eq!(x.as_f64(), 0.25f64);
        let y: f64 = sc(1.5e-3);
        assert_eq!(y, 1.5e-3);
    }
}
