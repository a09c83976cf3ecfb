//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the solvers are generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
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
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Lossy conversion used for error payloads and text output.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(requested, 64 ε)`: tolerances below what the type can resolve are clamped.
    #[inline]
    fn resolvable(requested: f64) -> Self {
        Self::lit(requested).max(Self::epsilon() * Self::lit(64.0))
    }

    /// Reduces an angle to `[0, 2π)`.
    #[inline]
    fn wrap_angle(self) -> Self {
        let r = self % Self::TAU();
        if r < Self::zero() {
            r + Self::TAU()
        } else {
            r
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
