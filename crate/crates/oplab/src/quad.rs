//! Gauss–Hermite quadrature for standard-normal expectations.
//!
//! The mixture model's population quantities involve E[g(Z)] for smooth g
//! with no closed form; Gauss–Hermite handles these to near machine
//! precision at modest orders. Nodes and weights come from the Golub–Welsch
//! eigendecomposition of the Jacobi matrix, computed once per order and
//! cached process-wide.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default rule order used by the model layer: >12 correct digits for the
/// bounded smooth integrands that show up here.
pub const DEFAULT_ORDER: usize = 100;

const MIN_ORDER: usize = 10;
const MAX_ORDER: usize = 200;

/// Nodes and weights for ∫ f(x)·exp(−x²) dx ≈ Σ wᵢ f(xᵢ).
struct HermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn hermite_rule(order: usize) -> Arc<HermiteRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(order).or_insert_with(|| Arc::new(build_rule(order))).clone()
}

fn build_rule(order: usize) -> HermiteRule {
    // Jacobi matrix for the (physicists') Hermite polynomials: zero
    // diagonal, off-diagonal sqrt(k/2). Its eigenvalues are the nodes; the
    // squared first eigenvector components, times mu0 = sqrt(pi), are the
    // weights.
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mu0 = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    HermiteRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Approximates E[g(Z)] for Z ~ N(0,1).
///
/// Exact for polynomials of degree < 2·order; `order` must lie in
/// [10, 200]. A non-finite integrand value at any node is a structured
/// error (the expectation would be meaningless).
pub fn gauss_hermite_expect(integrand: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::validation(format!(
            "quadrature order must lie in [{MIN_ORDER}, {MAX_ORDER}], got {order}"
        )));
    }
    let rule = hermite_rule(order);
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut total = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let z = sqrt2 * x;
        let v = integrand(z);
        if !v.is_finite() {
            return Err(Error::non_finite(format!(
                "quadrature integrand returned {v} at z = {z}"
            )));
        }
        total += w * v;
    }
    Ok(inv_sqrt_pi * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_range_enforced() {
        assert!(gauss_hermite_expect(|x| x, 9).is_err());
        assert!(gauss_hermite_expect(|x| x, 201).is_err());
        assert!(gauss_hermite_expect(|x| x, 10).is_ok());
        assert!(gauss_hermite_expect(|x| x, 200).is_ok());
    }

    #[test]
    fn gaussian_moments_are_exact() {
        for order in [10, 50, 100, 200] {
            let m1 = gauss_hermite_expect(|x| x, order).unwrap();
            let m2 = gauss_hermite_expect(|x| x * x, order).unwrap();
            let m4 = gauss_hermite_expect(|x| x.powi(4), order).unwrap();
            let m6 = gauss_hermite_expect(|x| x.powi(6), order).unwrap();
            assert!(m1.abs() < 1e-12, "order {order}: E[X] = {m1}");
            assert!((m2 - 1.0).abs() < 1e-12, "order {order}: E[X^2] = {m2}");
            assert!((m4 - 3.0).abs() < 1e-11, "order {order}: E[X^4] = {m4}");
            assert!((m6 - 15.0).abs() < 1e-10, "order {order}: E[X^6] = {m6}");
        }
    }

    #[test]
    fn smooth_non_polynomial_reference() {
        // E[cos Z] = exp(-1/2), a closed form independent of the rule.
        let got = gauss_hermite_expect(f64::cos, 40).unwrap();
        assert!((got - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = gauss_hermite_expect(|x| 1.0 / x, DEFAULT_ORDER);
        // 1/x is finite at every Hermite node (none are exactly 0 for even
        // order), so force the failure deterministically instead.
        drop(r);
        let e = gauss_hermite_expect(|_| f64::NAN, DEFAULT_ORDER).unwrap_err();
        assert!(matches!(e, Error::NonFinite { .. }));
    }

    #[test]
    fn cached_rule_is_deterministic() {
        let a = gauss_hermite_expect(|x| (x * 0.7).tanh() * x, 100).unwrap();
        let b = gauss_hermite_expect(|x| (x * 0.7).tanh() * x, 100).unwrap();
        assert_eq!(a, b);
    }
}
