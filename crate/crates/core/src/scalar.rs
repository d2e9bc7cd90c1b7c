use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating-point type usable throughout the AHP math.
///
/// Everything in this crate is written against `Scalar`; the crate root
/// exports `f64` aliases for the common case.
pub trait Scalar:
    Float + FromPrimitive + FromStr + Display + Debug + Default + Sum + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Strictly positive and finite; false for NaN.
    fn is_positive_finite(self) -> bool {
        self > Self::zero() && self.is_finite()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
