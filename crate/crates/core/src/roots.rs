//! Scalar root bracketing and one-dimensional minimization.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Bisection on a sign-changing bracket down to width `tol`, then Newton
/// polish with `df`; a Newton step leaving the final bracket is discarded.
pub fn bisect_newton<T: Real>(
    f: impl Fn(T) -> T,
    df: impl Fn(T) -> T,
    mut lo: T,
    mut hi: T,
    tol: T,
) -> Result<T> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !(flo.is_finite() && fhi.is_finite()) {
        return domain(format!("no sign change on [{lo}, {hi}]"));
    }
    let two = T::lit(2.0);
    for _ in 0..2000 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = lo + (hi - lo) / two;
    for _ in 0..3 {
        let d = df(x);
        if d == T::zero() || !d.is_finite() {
            break;
        }
        let next = x - f(x) / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
pub fn golden_section_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    // include the end points so boundary minima are reported exactly
    let mut best = (c, fc);
    for x in [a, b, d] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}
