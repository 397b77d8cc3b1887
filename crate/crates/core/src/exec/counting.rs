//! Operation-counting scalar.
//!
//! [`Counted`] wraps an `f64` and bumps per-thread tallies on every
//! arithmetic operation. The executor merges worker tallies back into the
//! dispatching thread when a parallel loop completes, so a counting run
//! reports the same totals regardless of the worker count.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, Num, NumCast, One, ToPrimitive, Zero};

use crate::real::Real;

/// Raw floating point operation tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpTally {
    pub adds: u64,
    pub muls: u64,
    pub fmas: u64,
    pub divs: u64,
    pub sqrts: u64,
}

impl OpTally {
    /// FLOP total with fused multiply-adds counted as two operations.
    pub fn flops(&self) -> u64 {
        self.adds + self.muls + 2 * self.fmas + self.divs + self.sqrts
    }

    pub fn delta_since(&self, earlier: &OpTally) -> OpTally {
        OpTally {
            adds: self.adds - earlier.adds,
            muls: self.muls - earlier.muls,
            fmas: self.fmas - earlier.fmas,
            divs: self.divs - earlier.divs,
            sqrts: self.sqrts - earlier.sqrts,
        }
    }

    pub fn merge(&mut self, other: &OpTally) {
        self.adds += other.adds;
        self.muls += other.muls;
        self.fmas += other.fmas;
        self.divs += other.divs;
        self.sqrts += other.sqrts;
    }
}

thread_local! {
    static TALLY: Cell<OpTally> = const { Cell::new(OpTally { adds: 0, muls: 0, fmas: 0, divs: 0, sqrts: 0 }) };
}

/// Snapshot of the calling thread's tally.
pub fn current_tally() -> OpTally {
    TALLY.with(|t| t.get())
}

/// Adds `delta` into the calling thread's tally.
pub fn absorb_tally(delta: &OpTally) {
    TALLY.with(|t| {
        let mut v = t.get();
        v.merge(delta);
        t.set(v);
    });
}

/// Runs `f` and returns its result together with the operations it performed
/// on the calling thread (including merged worker tallies).
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, OpTally) {
    let before = current_tally();
    let r = f();
    (r, current_tally().delta_since(&before))
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Mul,
    Fma,
    Div,
    Sqrt,
}

#[inline]
fn bump(op: Op) {
    TALLY.with(|t| {
        let mut v = t.get();
        match op {
            Op::Add => v.adds += 1,
            Op::Mul => v.muls += 1,
            Op::Fma => v.fmas += 1,
            Op::Div => v.divs += 1,
            Op::Sqrt => v.sqrts += 1,
        }
        t.set(v);
    });
}

/// `f64` that counts the arithmetic performed on it.
///
/// Values are bitwise identical to the same computation on plain `f64`.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
#[repr(transparent)]
pub struct Counted(pub f64);

impl Counted {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Debug for Counted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl fmt::Display for Counted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! counted_binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $op:tt, $kind:expr) => {
        impl $tr for Counted {
            type Output = Counted;
            #[inline]
            fn $m(self, rhs: Counted) -> Counted {
                bump($kind);
                Counted(self.0 $op rhs.0)
            }
        }
        impl $atr for Counted {
            #[inline]
            fn $am(&mut self, rhs: Counted) {
                bump($kind);
                self.0 = self.0 $op rhs.0;
            }
        }
    };
}

counted_binop!(Add, add, AddAssign, add_assign, +, Op::Add);
counted_binop!(Sub, sub, SubAssign, sub_assign, -, Op::Add);
counted_binop!(Mul, mul, MulAssign, mul_assign, *, Op::Mul);
counted_binop!(Div, div, DivAssign, div_assign, /, Op::Div);
counted_binop!(Rem, rem, RemAssign, rem_assign, %, Op::Div);

impl Neg for Counted {
    type Output = Counted;
    #[inline]
    fn neg(self) -> Counted {
        Counted(-self.0)
    }
}

impl Sum for Counted {
    fn sum<I: Iterator<Item = Counted>>(iter: I) -> Counted {
        iter.fold(Counted(0.0), |a, b| a + b)
    }
}

impl Zero for Counted {
    fn zero() -> Self {
        Counted(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl One for Counted {
    fn one() -> Self {
        Counted(1.0)
    }
}

impl Num for Counted {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Counted)
    }
}

impl ToPrimitive for Counted {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0)
    }
}

impl NumCast for Counted {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Counted)
    }
}

// Comparisons, sign manipulation and rounding are not floating point work in
// the roofline sense and are left uncounted.
macro_rules! passthrough {
    ($($name:ident),*) => {
        $(
            #[inline]
            fn $name(self) -> Self {
                Counted(self.0.$name())
            }
        )*
    };
}

macro_rules! passthrough_pred {
    ($($name:ident),*) => {
        $(
            #[inline]
            fn $name(self) -> bool {
                self.0.$name()
            }
        )*
    };
}

impl Float for Counted {
    fn nan() -> Self {
        Counted(f64::NAN)
    }
    fn infinity() -> Self {
        Counted(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Counted(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Counted(-0.0)
    }
    fn min_value() -> Self {
        Counted(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Counted(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        Counted(f64::MAX)
    }
    fn epsilon() -> Self {
        Counted(f64::EPSILON)
    }

    passthrough_pred!(is_nan, is_infinite, is_finite, is_normal, is_sign_positive, is_sign_negative);
    passthrough!(floor, ceil, round, trunc, fract, abs, signum);

    fn classify(self) -> FpCategory {
        self.0.classify()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        bump(Op::Fma);
        Counted(self.0.mul_add(a.0, b.0))
    }

    fn recip(self) -> Self {
        bump(Op::Div);
        Counted(self.0.recip())
    }

    fn powi(self, n: i32) -> Self {
        for _ in 1..n.unsigned_abs() {
            bump(Op::Mul);
        }
        if n < 0 {
            bump(Op::Div);
        }
        Counted(self.0.powi(n))
    }

    fn powf(self, n: Self) -> Self {
        Counted(self.0.powf(n.0))
    }

    fn sqrt(self) -> Self {
        bump(Op::Sqrt);
        Counted(self.0.sqrt())
    }

    passthrough!(exp, exp2, ln, log2, log10, cbrt, sin, cos, tan, asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh);

    fn log(self, base: Self) -> Self {
        Counted(self.0.log(base.0))
    }

    fn max(self, other: Self) -> Self {
        Counted(self.0.max(other.0))
    }

    fn min(self, other: Self) -> Self {
        Counted(self.0.min(other.0))
    }

    fn abs_sub(self, other: Self) -> Self {
        bump(Op::Add);
        Counted(if self.0 <= other.0 { 0.0 } else { self.0 - other.0 })
    }

    fn hypot(self, other: Self) -> Self {
        Counted(self.0.hypot(other.0))
    }

    fn atan2(self, other: Self) -> Self {
        Counted(self.0.atan2(other.0))
    }

    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.0.sin_cos();
        (Counted(s), Counted(c))
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0)
    }

    fn copysign(self, sign: Self) -> Self {
        Counted(self.0.copysign(sign.0))
    }
}

impl PartialEq<f64> for Counted {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for Counted {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

impl Real for Counted {
    const BYTES: usize = 8;

    #[inline(always)]
    fn of(x: f64) -> Self {
        Counted(x)
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_basic_ops() {
        let (v, t) = measure(|| {
            let a = Counted(1.5);
            let b = Counted(2.0);
            let c = a * b + a / b - b.sqrt();
            c.mul_add(a, b)
        });
        let plain = (1.5f64 * 2.0 + 1.5 / 2.0 - 2.0f64.sqrt()).mul_add(1.5, 2.0);
        assert_eq!(v.0.to_bits(), plain.to_bits());
        assert_eq!(t, OpTally { adds: 2, muls: 1, fmas: 1, divs: 1, sqrts: 1 });
        assert_eq!(t.flops(), 7);
    }

    #[test]
    fn comparisons_are_free() {
        let (_, t) = measure(|| {
            let a = Counted(-3.0);
            (a.abs().max(Counted(1.0)).min(Counted(5.0)), -a, a < Counted(0.0))
        });
        assert_eq!(t.flops(), 0);
    }
}
