//! Deterministic power-law testbed: the reference objective ‖θ‖^p/p has a
//! degenerate minimum at the origin, and its perturbed companion
//! ‖θ‖^p/p − ε‖θ‖^q/q tilts the minimizer out to radius ε^{1/(p−q)}.
//! The pair reproduces, without any sampling noise, the geometry that the
//! statistical families exhibit in expectation: a flat landscape near a
//! degenerate optimum plus a small perturbation that relocates it.

use crate::error::{Error, Result};
use crate::util::pow0;

/// Parameters of the power-law pair. `p` and `q` may be any reals with
/// q ≥ 2 and p > q + 1; `eps_n` ≥ 0 scales the perturbation (0 makes the
/// perturbed objective coincide with the reference one).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialSpec {
    pub p: f64,
    pub q: f64,
    pub eps_n: f64,
    pub d: usize,
}

impl PolynomialSpec {
    pub fn new(p: f64, q: f64, eps_n: f64, d: usize) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && eps_n.is_finite()) {
            return Err(Error::validation("polynomial exponents must be finite"));
        }
        if q < 2.0 {
            return Err(Error::validation(format!("q must be >= 2, got {q}")));
        }
        if p <= q + 1.0 {
            return Err(Error::validation(format!(
                "p must exceed q + 1 for a well-separated pair, got p = {p}, q = {q}"
            )));
        }
        if eps_n < 0.0 {
            return Err(Error::validation(format!("eps_n must be >= 0, got {eps_n}")));
        }
        if d == 0 {
            return Err(Error::validation("d must be >= 1"));
        }
        Ok(PolynomialSpec { p, q, eps_n, d })
    }

    /// Norm of the perturbed minimizer, ε^{1/(p−q)}; 0 when ε = 0.
    pub fn perturbed_minimizer_norm(&self) -> f64 {
        if self.eps_n == 0.0 {
            0.0
        } else {
            self.eps_n.powf(1.0 / (self.p - self.q))
        }
    }
}

/// Evaluates the reference objective (`perturbed` = false) or the tilted one
/// (`perturbed` = true): (value, gradient, row-major Hessian).
///
/// With w = θ/‖θ‖, the Hessian is
/// [r^{p−2} − ε·r^{q−2}]·I + [(p−2)·r^{p−2} − ε(q−2)·r^{q−2}]·wwᵀ.
/// At the origin every power-law term has the limit 0 except r^{q−2} when
/// q = 2, whose limit 1 leaves the analytic −ε·I.
pub(crate) fn eval(spec: &PolynomialSpec, perturbed: bool, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let d = spec.d;
    let eps = if perturbed { spec.eps_n } else { 0.0 };
    let r: f64 = theta.iter().map(|v| v * v).sum::<f64>().sqrt();

    let value = if r == 0.0 {
        0.0
    } else {
        r.powf(spec.p) / spec.p - eps * r.powf(spec.q) / spec.q
    };

    let rp = pow0(r, spec.p - 2.0);
    let rq = pow0(r, spec.q - 2.0);
    let gscale = rp - eps * rq;
    let grad: Vec<f64> = theta.iter().map(|t| gscale * t).collect();

    let iso = rp - eps * rq;
    let outer = (spec.p - 2.0) * rp - eps * (spec.q - 2.0) * rq;
    let mut hess = vec![0.0; d * d];
    if r > 0.0 {
        for i in 0..d {
            for j in 0..d {
                hess[i * d + j] = outer * (theta[i] / r) * (theta[j] / r);
            }
        }
    }
    for i in 0..d {
        hess[i * d + i] += iso;
    }
    (value, grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_boundaries() {
        assert!(PolynomialSpec::new(4.0, 2.0, 0.1, 1).is_ok());
        assert!(PolynomialSpec::new(3.0, 2.0, 0.1, 1).is_err()); // p = q+1
        assert!(PolynomialSpec::new(4.0, 1.9, 0.1, 1).is_err());
        assert!(PolynomialSpec::new(4.0, 2.0, -0.1, 1).is_err());
        assert!(PolynomialSpec::new(4.0, 2.0, 0.0, 1).is_ok()); // unperturbed
        assert!(PolynomialSpec::new(4.0, 2.0, 0.1, 0).is_err());
    }

    #[test]
    fn minimizer_norm() {
        let spec = PolynomialSpec::new(4.0, 2.0, 0.01, 1).unwrap();
        assert!((spec.perturbed_minimizer_norm() - 0.1).abs() < 1e-15);
        let flat = PolynomialSpec::new(4.0, 2.0, 0.0, 1).unwrap();
        assert_eq!(flat.perturbed_minimizer_norm(), 0.0);
    }

    #[test]
    fn perturbed_gradient_vanishes_at_the_tilted_minimizer() {
        let spec = PolynomialSpec::new(5.0, 2.5, 0.03, 1).unwrap();
        let r = spec.perturbed_minimizer_norm();
        let (_, g, _) = eval(&spec, true, &[r]);
        assert!(g[0].abs() < 1e-15, "gradient {} at radius {r}", g[0]);
    }

    #[test]
    fn scalar_hand_values() {
        // p = 4, q = 2, ε = 0.1, θ = 2: value 2⁴/4 − 0.1·2²/2 = 3.8,
        // gradient 2³ − 0.1·2 = 7.8, curvature 3·2² − 0.1 = 11.9.
        let spec = PolynomialSpec::new(4.0, 2.0, 0.1, 1).unwrap();
        let (v, g, h) = eval(&spec, true, &[2.0]);
        assert!((v - 3.8).abs() < 1e-14);
        assert!((g[0] - 7.8).abs() < 1e-14);
        assert!((h[0] - 11.9).abs() < 1e-14);
    }

    #[test]
    fn origin_hessian_limits() {
        // q = 2 keeps −ε·I at the origin; q > 2 leaves the zero matrix.
        let spec2 = PolynomialSpec::new(4.0, 2.0, 0.25, 2).unwrap();
        let (_, g, h) = eval(&spec2, true, &[0.0, 0.0]);
        assert_eq!(g, vec![0.0, 0.0]);
        assert_eq!(h, vec![-0.25, 0.0, 0.0, -0.25]);

        let spec3 = PolynomialSpec::new(5.0, 3.0, 0.25, 2).unwrap();
        let (_, _, h3) = eval(&spec3, true, &[0.0, 0.0]);
        assert_eq!(h3, vec![0.0; 4]);
    }

    #[test]
    fn reference_matches_perturbed_with_zero_eps() {
        let spec = PolynomialSpec::new(4.5, 2.0, 0.0, 3).unwrap();
        let theta = [0.4, -0.2, 0.7];
        let (v1, g1, h1) = eval(&spec, false, &theta);
        let (v2, g2, h2) = eval(&spec, true, &theta);
        assert_eq!(v1, v2);
        assert_eq!(g1, g2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn rotational_symmetry() {
        // Value depends on the radius only.
        let spec = PolynomialSpec::new(6.0, 2.0, 0.05, 2).unwrap();
        let (va, _, _) = eval(&spec, true, &[0.3, 0.4]);
        let (vb, _, _) = eval(&spec, true, &[0.5, 0.0]);
        assert!((va - vb).abs() < 1e-15);
    }
}
