//! Scalar root finding on monotone functions.

use crate::error::{Error, Result};

const MAX_DOUBLINGS: usize = 2000;
const MAX_ITER: usize = 400;

/// Solve `h(w) = target` for a strictly increasing `h` on `[lo, ∞)`.
///
/// The upper end of the bracket is doubled until `h(hi) ≥ target`, then the
/// interval is bisected until it stops shrinking in floating point.
pub fn solve_increasing(h: impl Fn(f64) -> f64, target: f64, lo: f64) -> Result<f64> {
    if h(lo) >= target {
        return Ok(lo);
    }
    let mut a = lo;
    let mut b = lo.max(1.0);
    let mut doublings = 0;
    while h(b) < target {
        a = b;
        b *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !b.is_finite() {
            return Err(Error::RootFinding(format!(
                "no upper bracket for target {target}"
            )));
        }
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if h(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    // Return whichever end has the smaller residual.
    if (h(a) - target).abs() <= (h(b) - target).abs() {
        Ok(a)
    } else {
        Ok(b)
    }
}

/// Safeguarded Newton for `g(r) = target` with `g` nondecreasing and `dg ≥ 0`.
///
/// Keeps a bracket `[a, b]` with `g(a) ≤ target ≤ g(b)` and falls back to
/// bisection whenever a Newton step leaves it.
pub fn safeguarded_newton(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    target: f64,
    lo: f64,
) -> Result<f64> {
    let g_lo = g(lo);
    if g_lo > target {
        return Err(Error::RootFinding(format!(
            "target {target} below the range of the function (value {g_lo} at {lo})"
        )));
    }
    if g_lo == target {
        return Ok(lo);
    }
    let mut a = lo;
    let mut b = if lo > 0.0 { 2.0 * lo } else { 1.0 };
    let mut doublings = 0;
    while g(b) < target {
        a = b;
        b *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !b.is_finite() {
            return Err(Error::RootFinding(format!(
                "target {target} above the range of the function"
            )));
        }
    }
    let mut r = 0.5 * (a + b);
    for _ in 0..MAX_ITER {
        let v = g(r) - target;
        if v == 0.0 {
            return Ok(r);
        }
        if v < 0.0 {
            a = r;
        } else {
            b = r;
        }
        let d = dg(r);
        let mut next = if d > 0.0 { r - v / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - r).abs() <= 4.0 * f64::EPSILON * r.abs().max(1e-300)
            || b - a <= 4.0 * f64::EPSILON * b.abs()
        {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt_two() {
        let r = solve_increasing(|w| w * w, 2.0, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisection_expands_bracket() {
        let r = solve_increasing(|w| w, 1e6, 1e-8).unwrap();
        assert!((r - 1e6).abs() < 1e-8);
    }

    #[test]
    fn newton_log_root() {
        let r = safeguarded_newton(|r| r.exp(), |r| r.exp(), 3.0, 0.0).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn newton_rejects_target_below_range() {
        assert!(safeguarded_newton(|r| r + 1.0, |_| 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn newton_rejects_target_above_bounded_range() {
        // g(r) = 1 − e^{−r} never reaches 2.
        assert!(safeguarded_newton(|r| 1.0 - (-r).exp(), |r| (-r).exp(), 2.0, 0.0).is_err());
    }
}
