//! A one-dimensional likelihood pair showing that sample-level stability of
//! an iterative scheme is not guaranteed by population-level convergence.
//! The population log-likelihood −θ⁴(θ−2)² has its relevant maximizer at 0,
//! while the sample version −(θ⁴ − θ²/√n)(θ−2)² acquires a small hump near
//! the origin; Newton started inside the hump can be expelled toward the
//! spurious maximizer at θ = 2.
//!
//! Maximization convention: `eval` returns the log-likelihood itself, as
//! stated, not its negation. Newton's update θ − L′/L″ is unchanged by the
//! sign flip, so the iteration layer treats both conventions identically.

use crate::error::{Error, Result};

/// The sample size controls the bump scale c = n^{−1/2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterexampleSpec {
    pub n: u64,
}

impl CounterexampleSpec {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("n must be >= 1"));
        }
        Ok(CounterexampleSpec { n })
    }

    /// Perturbation amplitude c = n^{−1/2}.
    pub fn bump_scale(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// Radius √(c/2) of the spurious near-origin hump.
    ///
    /// To leading order in c the sample factor (θ⁴ − cθ²) peaks (in absolute
    /// value, on the hump side) where its derivative 4θ³ − 2cθ vanishes, at
    /// θ = √(c/2). Starting points below this radius see the hump's basin,
    /// points above it see the valley that leads away from the origin.
    pub fn hump_radius(&self) -> f64 {
        (0.5 * self.bump_scale()).sqrt()
    }
}

/// Log-likelihood, first and second derivative at bump scale `c`
/// (c = 0 recovers the population function).
///
/// Expanded form of −(θ⁴ − cθ²)(θ−2)²:
///   L  = −θ⁶ + 4θ⁵ − (4−c)θ⁴ − 4cθ³ + 4cθ²
pub(crate) fn eval(c: f64, theta: f64) -> (f64, f64, f64) {
    let t = theta;
    let value = ((((-t + 4.0) * t - (4.0 - c)) * t - 4.0 * c) * t + 4.0 * c) * t * t;
    let grad = ((((-6.0 * t + 20.0) * t - 4.0 * (4.0 - c)) * t - 12.0 * c) * t + 8.0 * c) * t;
    let hess = (((-30.0 * t + 80.0) * t - 12.0 * (4.0 - c)) * t - 24.0 * c) * t + 8.0 * c;
    (value, grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factored(c: f64, t: f64) -> f64 {
        -(t.powi(4) - c * t * t) * (t - 2.0) * (t - 2.0)
    }

    #[test]
    fn expanded_form_matches_factored_form() {
        for n in [1u64, 100, 10_000] {
            let c = CounterexampleSpec::new(n).unwrap().bump_scale();
            for i in -30..=30 {
                let t = i as f64 * 0.1;
                let (v, _, _) = eval(c, t);
                assert!(
                    (v - factored(c, t)).abs() <= 1e-12 * v.abs().max(1.0),
                    "mismatch at c = {c}, t = {t}"
                );
            }
        }
    }

    #[test]
    fn both_maximizers_are_stationary() {
        // θ = 0 and θ = 2 are critical for every bump scale. At 0 the
        // factored powers of θ make the cancellation exact; at 2 the Horner
        // evaluation of 4 − (4 − c) leaves rounding residue of order 1e−15.
        for c in [0.0, 0.01, 0.3] {
            let (v0, g0, _) = eval(c, 0.0);
            let (v2, g2, _) = eval(c, 2.0);
            assert_eq!(v0, 0.0);
            assert_eq!(g0, 0.0);
            assert!(v2.abs() < 1e-12, "value {v2} at the spurious maximizer");
            assert!(g2.abs() < 1e-12, "gradient {g2} at the spurious maximizer");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = 0.01;
        let h = 1e-6;
        for i in [-7, -3, 1, 5, 9, 17] {
            let t = i as f64 * 0.11;
            let (_, g, s) = eval(c, t);
            let (vp, gp, _) = eval(c, t + h);
            let (vm, gm, _) = eval(c, t - h);
            let g_fd = (vp - vm) / (2.0 * h);
            let s_fd = (gp - gm) / (2.0 * h);
            assert!((g - g_fd).abs() <= 1e-4 * g.abs().max(1.0), "grad at {t}");
            assert!((s - s_fd).abs() <= 1e-4 * s.abs().max(1.0), "hess at {t}");
        }
    }

    #[test]
    fn population_is_the_zero_bump_limit() {
        let (v, g, h) = eval(0.0, 1.5);
        // −θ⁴(θ−2)² at 1.5: −(5.0625)(0.25).
        assert!((v + 1.265625).abs() < 1e-12);
        // L′ = −2θ³(θ−2)(3θ−4): at 1.5: −2·3.375·(−0.5)·0.5 = 1.6875.
        assert!((g - 1.6875).abs() < 1e-12);
        // L″ = −(30θ⁴ − 80θ³ + 48θ²): at 1.5: −(151.875 − 270 + 108) = 10.125.
        assert!((h - 10.125).abs() < 1e-12);
    }

    #[test]
    fn sample_bump_creates_positive_hump_near_origin() {
        // For θ just above 0 the sample likelihood is positive (the
        // population one is strictly negative): the spurious hump.
        let c = CounterexampleSpec::new(10_000).unwrap().bump_scale();
        let (v_sample, _, _) = eval(c, 0.05);
        let (v_pop, _, _) = eval(0.0, 0.05);
        assert!(v_sample > 0.0);
        assert!(v_pop < 0.0);
    }

    #[test]
    fn hump_radius_is_a_stationary_point_to_leading_order() {
        // The exact stationary root of L near the origin differs from
        // √(c/2) only at order c (0.070054 vs 0.070711 for n = 10⁴), and
        // the gradient changes sign across it.
        let spec = CounterexampleSpec::new(10_000).unwrap();
        let c = spec.bump_scale();
        let r = spec.hump_radius();
        assert!((r - 0.07071067811865475).abs() < 1e-15);
        let (_, g_lo, _) = eval(c, 0.9 * r);
        let (_, g_hi, _) = eval(c, 1.1 * r);
        assert!(g_lo > 0.0 && g_hi < 0.0, "hump peak between 0.9r and 1.1r");
    }

    #[test]
    fn rejects_zero_n() {
        assert!(CounterexampleSpec::new(0).is_err());
    }
}
