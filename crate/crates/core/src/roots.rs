//! Bracketing root search: plain bisection and a forward scan for the first sign change.

use crate::{Error, Result};

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
///
/// Stops when the bracket is narrower than `tol` or cannot shrink further in
/// floating point. Returns the midpoint of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    what: &'static str,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(Error::BracketFailure(what));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of [`first_sign_change`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Sign changes seen on the scanned range, including the returned one.
    pub sign_changes: usize,
    /// End of the scanned range.
    pub scanned_to: f64,
}

/// Walks from `start` in increments of `step` looking for the first sign change.
///
/// The initial window is `[start, start + initial_span]`. If it holds no sign
/// change, the window end doubles (distance from `start`) until it passes
/// `max_span`. Once found, the rest of the current window is still scanned so
/// that the number of sign changes can be reported.
pub fn first_sign_change<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    start: f64,
    step: f64,
    initial_span: f64,
    max_span: f64,
    what: &'static str,
) -> Result<Bracket> {
    let mut found: Option<(f64, f64)> = None;
    let mut changes = 0usize;
    let mut x_prev = start;
    let mut f_prev = f(start)?;
    let mut span = initial_span.min(max_span);
    let mut k = 0u64;
    loop {
        let end = start + span;
        loop {
            let x = start + (k + 1) as f64 * step;
            if x > end + 0.5 * step {
                break;
            }
            k += 1;
            let fx = f(x)?;
            if fx == 0.0 || (f_prev != 0.0 && (fx > 0.0) != (f_prev > 0.0)) {
                changes += 1;
                if found.is_none() {
                    found = Some((x_prev, x));
                }
            }
            x_prev = x;
            f_prev = fx;
        }
        if let Some((lo, hi)) = found {
            return Ok(Bracket { lo, hi, sign_changes: changes, scanned_to: x_prev });
        }
        if span >= max_span {
            return Err(Error::NoSignChange(what));
        }
        span = (2.0 * span).min(max_span);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, "t").unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn bisect_needs_bracket() {
        assert_eq!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, "t"), Err(Error::BracketFailure("t")));
    }

    #[test]
    fn scan_expands_and_counts() {
        // roots at 3.3 and 3.7; initial window [0,1] must expand to 4
        let b = first_sign_change(|x| Ok((x - 3.3) * (x - 3.7)), 0.0, 0.1, 1.0, 50.0, "t").unwrap();
        assert!(b.lo < 3.3 && b.hi > 3.3);
        assert_eq!(b.sign_changes, 2);
        // landing exactly on a root counts once
        let b = first_sign_change(|x| Ok(x - 0.5), 0.0, 0.25, 1.0, 1.0, "t").unwrap();
        assert_eq!((b.sign_changes, b.hi), (1, 0.5));
        assert!(first_sign_change(|_| Ok(1.0), 0.0, 0.1, 1.0, 5.0, "t").is_err());
    }
}
