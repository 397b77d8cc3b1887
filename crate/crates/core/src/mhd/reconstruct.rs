//! Interface states: donor cell and piecewise linear with the MC limiter.

use super::eos::PrimState;
use crate::real::{half, Real};

/// Monotonized-central limited slope of the middle cell of `(a, b, c)`.
///
/// Zero at extrema, otherwise `sign * min(2|dl|, 2|dr|, |dl + dr|/2)`.
#[inline(always)]
pub fn mc_slope<T: Real>(a: T, b: T, c: T) -> T {
    let dl = b - a;
    let dr = c - b;
    if dl * dr <= T::zero() {
        return T::zero();
    }
    let two = T::of(2.0);
    let m = (two * dl.abs()).min(two * dr.abs()).min(half::<T>() * (dl + dr).abs());
    if dl > T::zero() {
        m
    } else {
        -m
    }
}

/// Left and right states at the face between `w[1]` and `w[2]` of a
/// four-cell stencil.
#[inline(always)]
pub fn plm_face<T: Real>(w: [T; 4]) -> (T, T) {
    let h = half::<T>();
    (w[1] + h * mc_slope(w[0], w[1], w[2]), w[2] - h * mc_slope(w[1], w[2], w[3]))
}

/// PLM interface states along a line.
///
/// Entry `n` of each output belongs to the face between cells `n + 1` and
/// `n + 2`, i.e. the faces that have two cells on each side.
pub fn plm_line<T: Real>(w: &[T]) -> (Vec<T>, Vec<T>) {
    w.windows(4).map(|s| plm_face([s[0], s[1], s[2], s[3]])).unzip()
}

/// Componentwise [`plm_line`] over primitive states.
pub fn plm_line_prim<T: Real>(w: &[PrimState<T>]) -> (Vec<PrimState<T>>, Vec<PrimState<T>>) {
    w.windows(4)
        .map(|s| {
            let f = |get: &dyn Fn(&PrimState<T>) -> T| plm_face([get(&s[0]), get(&s[1]), get(&s[2]), get(&s[3])]);
            let (rl, rr) = f(&|p| p.rho);
            let (pl, pr) = f(&|p| p.p);
            let mut l = PrimState { rho: rl, p: pl, ..Default::default() };
            let mut r = PrimState { rho: rr, p: pr, ..Default::default() };
            for d in 0..3 {
                (l.v[d], r.v[d]) = f(&|p| p.v[d]);
                (l.b[d], r.b[d]) = f(&|p| p.b[d]);
            }
            (l, r)
        })
        .unzip()
}
