//! Bracketed scalar root finding.

use crate::error::{CoreError, Result};

/// Bisection on `[lo, hi]` driven to floating-point resolution.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs (or one of them to be
/// exactly zero). The loop stops when the midpoint can no longer be
/// distinguished from the bracket ends, so the returned root is accurate to
/// a few ulps; downstream identities that demand 1e-12 agreement rely on
/// this.
pub fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> Result<f64> {
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::NoSignChange { lo, hi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Bisection stopping once the bracket is narrower than `xtol`.
pub fn bisect_to(mut lo: f64, mut hi: f64, xtol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::NoSignChange { lo, hi });
    }
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(0.0, 2.0, |x| x * x - 2.0).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(bisect(1.0, 2.0, |x| x * x - 0.5).is_err());
    }

    #[test]
    fn exact_endpoint_root() {
        assert_eq!(bisect(1.0, 3.0, |x| x - 1.0).unwrap(), 1.0);
    }
}
