//! Bracketing root finder for monotone decreasing functions on `[0, ∞)`.

use crate::error::{Error, Result};

const MAX_DOUBLINGS: usize = 2048;
const MAX_BISECTIONS: usize = 400;

/// Root of a strictly decreasing `f` with `f(0) > 0`.
///
/// The upper end of the bracket is found by doubling from `start`, and the
/// bracket is then halved until its width is within `rel_tol` of the upper end.
/// Both sign conditions are checked before bisecting.
pub fn decreasing_root<F>(f: F, start: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let at_zero = f(0.0);
    if !(at_zero > 0.0) {
        return Err(Error::numeric(format!("root not bracketed: f(0) = {at_zero} is not positive")));
    }
    let mut lo = 0.0;
    let mut hi = if start > 0.0 { start } else { 1.0 };
    let mut doublings = 0;
    loop {
        let v = f(hi);
        if v.is_nan() {
            return Err(Error::numeric(format!("f({hi}) is NaN")));
        }
        if v <= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::numeric("root not bracketed: f stays positive"));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
