//! Scalar abstraction shared by every kernel.
//!
//! Kernels are written once against [`Real`] and instantiated for `f64`,
//! `f32` and the operation-counting [`Counted`](crate::exec::Counted) scalar.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Floating point scalar usable in solver kernels.
pub trait Real:
    Float + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Storage size of one element, used by the streaming byte model.
    const BYTES: usize;

    /// Converts an `f64` literal or parameter into this scalar.
    fn of(x: f64) -> Self;

    /// Lossless widening to `f64` (exact for every implementor).
    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const BYTES: usize = 8;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const BYTES: usize = 4;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// `0.5` in the target precision.
#[inline(always)]
pub fn half<T: Real>() -> T {
    T::of(0.5)
}
