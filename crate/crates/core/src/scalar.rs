//! Scalar abstraction over the floating-point type used for coordinates,
//! probabilities, and losses.
//!
//! Every geometric and numeric routine in this crate is generic over
//! [`Scalar`], so the same pipeline runs in `f32` or `f64`. The crate root
//! exports `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar (`f32` or `f64`) usable throughout the toolkit.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant, rounding to the nearest representable
    /// value. Total for every finite input.
    fn from_f64_const(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Convert a count into a scalar. Total for the sizes this crate
    /// handles (point and group counts fit in the f32 mantissa range for
    /// desk-scale scenes and in f64 always).
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
