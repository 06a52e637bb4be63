use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point type the estimators are generic over.
///
/// Arithmetic and transcendental functions come from nalgebra's `RealField`
/// (so SVD and Cholesky are available generically); conversions go through
/// num-traits.
pub trait Scalar:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Machine epsilon, as `f64`.
    fn epsilon_f64() -> f64;
}

impl Scalar for f32 {
    fn epsilon_f64() -> f64 {
        f32::EPSILON as f64
    }
}

impl Scalar for f64 {
    fn epsilon_f64() -> f64 {
        f64::EPSILON
    }
}
