//! Scalar abstraction: the whole library is generic over the floating-point
//! type through this trait. `f32` and `f64` implement it; concrete aliases
//! live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the solver: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum<T> + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
///
/// Panics only if the scalar type cannot represent finite `f64` values at
/// all, which no supported type does.
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("scalar type must represent f64 literals")
}
