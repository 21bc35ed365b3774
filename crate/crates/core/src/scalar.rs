//! Floating-point abstraction shared by the model and evaluation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for probabilities, beliefs, indices and values.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// assume `f64`; `f32` instantiations are useful for memory-bound sweeps.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent finite `f64`
    /// values (possibly with rounding).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// True when the value lies in the closed unit interval.
    #[inline]
    fn is_probability(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Clamps `x` into `[0, 1]`, absorbing round-off from repeated updates.
#[inline]
pub fn clamp_unit<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}
