//! Safeguarded Newton–bisection for strictly increasing scalar functions.

use crate::{Error, Result};

pub(crate) const MAX_ITERATIONS: usize = 200;

/// Solves `f(x) = target` on `[lo, hi]` for a strictly increasing `f`.
///
/// `f` returns the value and derivative. A Newton step is taken whenever it
/// stays strictly inside the current bracket, otherwise the bracket is bisected.
pub(crate) fn solve_increasing<F>(f: F, mut lo: f64, mut hi: f64, target: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo - target >= 0.0 {
        return if flo - target <= tol { Ok(lo) } else { Err(Error::NoConvergence) };
    }
    if fhi - target <= 0.0 {
        return if target - fhi <= tol { Ok(hi) } else { Err(Error::NoConvergence) };
    }
    // linear guess on the bracket
    let mut x = lo + (hi - lo) * (target - flo) / (fhi - flo);
    let mut best = (f64::INFINITY, x);
    for _ in 0..MAX_ITERATIONS {
        let (fx, dfx) = f(x);
        let r = fx - target;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - r / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let settled = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0);
        x = next;
        if settled || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            let (fx, _) = f(x);
            if (fx - target).abs() < best.0 {
                best = ((fx - target).abs(), x);
            }
            break;
        }
    }
    if best.0 <= tol {
        Ok(best.1)
    } else {
        Err(Error::NoConvergence)
    }
}
