//! Independent recomputations of quantities the library is supposed to
//! hit. Each test derives its expected value from hand-written closed
//! forms or brute-force search, never by calling the code under test, and
//! freezes the numbers it verifies.

use oplab::algorithms::{make_operator, Algorithm, AlgorithmConfig};
use oplab::experiments::find_escaping_init;
use oplab::models::{gen_regression, CounterexampleSpec, Level, ModelSpec, PolynomialSpec};
use oplab::operator::{best_iterate_error, iterate, iterate_until, Operator};
use oplab::point::ParamPoint;

/// The flat-regression population gradient step at the default step size
/// is θ ↦ θ(1 − θ²). Running that recursion by hand gives both the exact
/// hit iteration and the constant of the t^{−1/2} law, which the library
/// iteration must reproduce.
#[test]
fn slow_half_law_predicts_the_gd_hit_iteration() {
    let threshold = 0.01;
    let mut theta: f64 = 0.9;
    let mut hit_oracle = None;
    let mut c_hat = 0.0;
    for t in 1..50_000usize {
        theta *= 1.0 - theta * theta;
        if t == 2_000 {
            c_hat = theta * (t as f64).sqrt();
        }
        if theta <= threshold {
            hit_oracle = Some(t);
            break;
        }
    }
    let hit_oracle = hit_oracle.expect("the hand recursion reaches 0.01");
    // e(t) ~ 1/sqrt(2t), so the constant is near 1/sqrt(2).
    assert!((c_hat - 0.5f64.sqrt()).abs() < 0.01, "constant {c_hat}");

    let model = ModelSpec::Regression { d: 1, p: 1 };
    let op = make_operator(
        &model,
        Algorithm::Gd,
        Level::Population,
        None,
        &AlgorithmConfig::default(),
    )
    .unwrap();
    let theta0 = ParamPoint::scalar(0.9).unwrap();
    let (_, hit) = iterate_until(&op, &theta0, &ParamPoint::zero(1), threshold, 50_000).unwrap();
    let hit = hit.expect("the library iteration reaches 0.01");
    // Same recursion up to floating-point association, so the hit
    // iterations agree to a step or two.
    assert!(
        (hit as i64 - hit_oracle as i64).abs() <= 2,
        "library {hit} vs oracle {hit_oracle}"
    );
    // And the t^{-1/2} law predicts it within a factor of four.
    let predicted = (c_hat / threshold).powi(2);
    assert!(
        (hit as f64) >= predicted / 4.0 && (hit as f64) <= predicted * 4.0,
        "hit {hit} vs predicted {predicted}"
    );
}

/// Bisection on the hand-expanded derivative of the escape objective
/// locates its near-origin stationary point, which must match the
/// leading-order radius sqrt(c/2) and the frozen value 0.0703664.
#[test]
fn counterexample_stationary_root_is_frozen() {
    let n = 10_000u64;
    let c = 1.0 / (n as f64).sqrt();
    // L' of theta^2 (theta-2)^2 (c - theta^2), written out by hand:
    // L'(t) = -6t^5 + 20t^4 - 4(4-c)t^3 - 12c t^2 + 8c t.
    let lp = |t: f64| {
        ((((-6.0 * t + 20.0) * t - 4.0 * (4.0 - c)) * t - 12.0 * c) * t + 8.0 * c) * t
    };
    let (mut lo, mut hi) = (0.05, 0.1);
    assert!(lp(lo) > 0.0 && lp(hi) < 0.0, "bracket must straddle the peak");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lp(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    assert!((root - 0.070_054_1).abs() < 1e-6, "root {root}");

    let spec = CounterexampleSpec::new(n).unwrap();
    // The closed-form hump radius sqrt(c/2) is the same point to O(c):
    // 0.94% above the exact root at this n.
    assert!((spec.hump_radius() - root).abs() < 0.015 * root);

    // Newton started above the hump walks back onto this exact root.
    let op = make_operator(
        &ModelSpec::Counterexample(spec),
        Algorithm::Newton,
        Level::Sample,
        None,
        &AlgorithmConfig::default(),
    )
    .unwrap();
    let trace = iterate(
        &op,
        &ParamPoint::scalar(0.1).unwrap(),
        40,
        &ParamPoint::zero(1),
    )
    .unwrap();
    assert!((trace.final_entry().point.as_scalar() - root).abs() < 1e-9);
}

/// The starting points that Newton expels toward θ = 2 live in a narrow
/// sliver just above the curvature sign change of the sample objective,
/// well below the hump radius. The deterministic search must find one
/// there, and the very first iterate must already be the closest the
/// trajectory ever gets to the origin.
#[test]
fn escaping_init_lies_in_the_curvature_sliver() {
    let n = 10_000;
    let a = find_escaping_init(n, 60).unwrap().expect("an escaping start exists");
    let b = find_escaping_init(n, 60).unwrap().unwrap();
    assert_eq!(a, b, "the search is deterministic");
    // The sample curvature root sits near 0.0397; escapers start just
    // above it, far below the hump radius 0.0707.
    assert!(a > 0.0395 && a < 0.0406, "init {a}");

    let op = make_operator(
        &ModelSpec::Counterexample(CounterexampleSpec::new(n as u64).unwrap()),
        Algorithm::Newton,
        Level::Sample,
        None,
        &AlgorithmConfig::default(),
    )
    .unwrap();
    let trace = iterate(&op, &ParamPoint::scalar(a).unwrap(), 60, &ParamPoint::zero(1)).unwrap();
    let (k, min_error) = best_iterate_error(&trace, &ParamPoint::zero(1));
    assert_eq!(k, 0, "the first jump already leaves the origin behind");
    assert_eq!(min_error, a);
    assert!((trace.final_entry().point.as_scalar() - 2.0).abs() <= 0.5);
}

/// Newton on the perturbed polynomial pair has its attracting fixed point
/// exactly at the perturbed minimizer sqrt(eps): the stationarity equation
/// theta^3 = eps*theta has no other positive root.
#[test]
fn polynomial_newton_sample_fixed_point_is_sqrt_eps() {
    for eps in [1e-3, 1e-4] {
        let spec = PolynomialSpec::new(4.0, 2.0, eps, 1).unwrap();
        let op = make_operator(
            &ModelSpec::Polynomial(spec),
            Algorithm::Newton,
            Level::Sample,
            None,
            &AlgorithmConfig::default(),
        )
        .unwrap();
        let trace = iterate(
            &op,
            &ParamPoint::scalar(0.5).unwrap(),
            60,
            &ParamPoint::zero(1),
        )
        .unwrap();
        let fp = trace.final_entry().point.as_scalar();
        assert!((fp - eps.sqrt()).abs() <= 1e-12, "eps {eps}: fixed point {fp}");
        // One more application does not move it.
        let again = op.apply(&trace.final_entry().point).unwrap().as_scalar();
        assert!((again - fp).abs() <= 1e-15);
    }
}

/// At the true parameter 0 the regression responses are pure noise, so
/// the empirical correlation between the noise and the squared covariates
/// vanishes; with 10^5 draws the mean of Y*X^2 has standard error about
/// sqrt(3)/316, far below the 0.05 budget.
#[test]
fn regression_noise_is_uncorrelated_with_squared_covariates() {
    let data = gen_regression(100_000, 1, 1, None, 20_260_816).unwrap();
    let mean: f64 = data.rows().map(|(x, y)| y * x[0] * x[0]).sum::<f64>() / data.n() as f64;
    assert!(mean.abs() < 0.05, "mean {mean}");
}
