//! Scalar abstraction shared by the numeric modules.
//!
//! Everything below the harness is generic over [`Real`], which is implemented
//! for `f32` and `f64`. The harness itself (config, CSV logs, metrics) is
//! fixed to `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion back to `f64`, used for error reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sign with `sign(0) = 0`, unlike [`Float::signum`].
#[inline]
pub fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Odd extension of `|x|^p`: `sign(x)·|x|^p`.
#[inline]
pub fn signed_pow<T: Real>(x: T, p: T) -> T {
    sign(x) * x.abs().powf(p)
}
