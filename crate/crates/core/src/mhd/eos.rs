//! Adiabatic ideal-MHD equation of state and pointwise state records.
//!
//! Magnetic fields use Lorentz-Heaviside units, so the magnetic pressure is
//! `B^2 / 2`.

use thiserror::Error;

use crate::real::{half, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrimState<T> {
    pub rho: T,
    pub v: [T; 3],
    pub p: T,
    pub b: [T; 3],
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConsState<T> {
    pub rho: T,
    pub m: [T; 3],
    /// Total energy density.
    pub e: T,
    pub b: [T; 3],
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum EosError {
    #[error("non-positive density {0}")]
    Density(f64),
    #[error("non-positive gas pressure {0}")]
    Pressure(f64),
}

#[inline(always)]
fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `v = m / rho`, `p = (gamma - 1)(E - rho v^2 / 2 - B^2 / 2)`.
#[inline]
pub fn cons_to_prim<T: Real>(c: &ConsState<T>, gamma: T) -> Result<PrimState<T>, EosError> {
    // Written as `!(x > 0)` so NaN is rejected too.
    if !(c.rho > T::zero()) {
        return Err(EosError::Density(c.rho.as_f64()));
    }
    let inv = T::one() / c.rho;
    let v = [c.m[0] * inv, c.m[1] * inv, c.m[2] * inv];
    let ke = half::<T>() * dot(&c.m, &v);
    let me = half::<T>() * dot(&c.b, &c.b);
    let p = (gamma - T::one()) * (c.e - ke - me);
    if !(p > T::zero()) {
        return Err(EosError::Pressure(p.as_f64()));
    }
    Ok(PrimState { rho: c.rho, v, p, b: c.b })
}

/// `m = rho v`, `E = p / (gamma - 1) + rho v^2 / 2 + B^2 / 2`.
#[inline]
pub fn prim_to_cons<T: Real>(w: &PrimState<T>, gamma: T) -> ConsState<T> {
    let m = [w.rho * w.v[0], w.rho * w.v[1], w.rho * w.v[2]];
    let e = w.p / (gamma - T::one()) + half::<T>() * (dot(&m, &w.v) + dot(&w.b, &w.b));
    ConsState { rho: w.rho, m, e, b: w.b }
}

/// Fast magnetosonic speed along axis `dim`.
///
/// Uses `(cs2 + ca2)^2 - 4 cs2 can2 = (cs2 - ca2)^2 + 4 cs2 (ca2 - can2)`, a
/// sum of non-negative terms, so the root never sees cancellation.
#[inline]
pub fn fast_speed<T: Real>(w: &PrimState<T>, gamma: T, dim: usize) -> T {
    let inv = T::one() / w.rho;
    let cs2 = gamma * w.p * inv;
    let bt2 = w.b[(dim + 1) % 3] * w.b[(dim + 1) % 3] + w.b[(dim + 2) % 3] * w.b[(dim + 2) % 3];
    let can2 = w.b[dim] * w.b[dim] * inv;
    let ca2 = can2 + bt2 * inv;
    let d = cs2 - ca2;
    let four = T::of(4.0);
    let root = (d * d + four * cs2 * (bt2 * inv)).sqrt();
    (half::<T>() * (cs2 + ca2 + root)).sqrt()
}
