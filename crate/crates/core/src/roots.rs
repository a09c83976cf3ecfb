//! Bracketing root finders for monotone scalar functions.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection on `[lo, hi]` for a function whose sign differs at the ends.
///
/// Stops when the bracket is narrower than `tol` or after `max_iter` halvings,
/// returning the midpoint of the final bracket.
pub fn bisect<T, F>(mut lo: T, mut hi: T, tol: T, max_iter: usize, mut f: F) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoConvergence(format!(
            "bracket [{lo}, {hi}] does not change sign"
        )));
    }
    let lo_positive = f_lo > T::zero();
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == T::zero() {
            return Ok(mid);
        }
        if (v > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * half)
}
