//! Scalar abstraction shared by the simulator and the statistics.
//!
//! Everything numeric in this crate is written against [`Real`], so the same
//! model can run in `f64` (the default used by the CLI) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite values at all, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in Real")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in Real")
    }

    #[inline]
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable in Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Nearest integer with halves rounded away from zero.
#[inline]
pub fn nearest_int<T: Real>(x: T) -> i64 {
    // `Float::round` is half-away-from-zero for both f32 and f64.
    x.round().to_i64().unwrap_or(if x > T::zero() { i64::MAX } else { i64::MIN })
}

/// Sign function with `sgn(0) = 0`.
#[inline]
pub fn sgn<T: Real>(x: T) -> i64 {
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else {
        0
    }
}
