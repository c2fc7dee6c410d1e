//! Small numeric helpers shared across modules.

/// Bisection on [lo, hi] assuming g(lo) and g(hi) have opposite signs
/// (either may be zero). Runs to floating-point interval exhaustion and
/// returns the midpoint, which is within a few ulps of the sign change.
pub(crate) fn bisect_root(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(lo < hi);
    let g_lo = g(lo);
    if g_lo == 0.0 {
        return lo;
    }
    let falling = g_lo > 0.0;
    // 200 halvings exhaust f64 resolution from any finite starting width.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == falling {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// x^e with the convention 0^0 = 1, used where an analytic limit removes
/// a removable singularity at the origin.
pub(crate) fn pow0(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_a_simple_root() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn handles_falling_functions() {
        let r = bisect_root(|x| 1.0 - x, 0.0, 5.0);
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_zero_at_endpoint_returns_endpoint() {
        assert_eq!(bisect_root(|x| x, 0.0, 1.0), 0.0);
    }

    #[test]
    fn pow0_convention() {
        assert_eq!(pow0(0.0, 0.0), 1.0);
        assert_eq!(pow0(0.0, 2.0), 0.0);
        assert_eq!(pow0(3.0, 2.0), 9.0);
    }
}
