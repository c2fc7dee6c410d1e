//! Convergence-regime bookkeeping: the parameters that summarize how a
//! population operator contracts (geometrically with factor κ, or
//! algebraically with exponent β) and how strongly sample perturbations
//! grow near the fixed point (exponent γ, negative when the deviation
//! blows up at small radii), together with the closed-form predictions
//! for the statistical radius an iterative scheme can reach and the
//! iteration budget needed to reach it.

use crate::error::{Error, Result};

/// Regime description for one (model, algorithm) pair.
///
/// Exactly one of `beta` (algebraic rate) and `kappa` (geometric rate) is
/// present. `gamma`'s sign encodes perturbation stability: γ ≥ 0 means the
/// deviation shrinks with the radius (stable), γ < 0 means it grows as the
/// radius shrinks (unstable).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeParams {
    beta: Option<f64>,
    kappa: Option<f64>,
    gamma: f64,
    rho: f64,
    eps: f64,
    alpha: f64,
    delta: f64,
    inner_radius: f64,
}

/// Statistical radius and iteration budget predicted for a regime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusPrediction {
    /// Distance from the fixed point the scheme is predicted to reach.
    pub radius: f64,
    /// Iterations predicted to reach it (a real number; callers round).
    pub iteration_budget: f64,
}

impl RegimeParams {
    /// Geometric (κ-contractive) regime with noise scale ε.
    /// Defaults: ρ = 1, α = 0.05, δ = 0.05, inner radius 0.
    pub fn fast(kappa: f64, gamma: f64, eps: f64) -> Result<Self> {
        Self::new(None, Some(kappa), gamma, 1.0, eps, 0.05, 0.05, 0.0)
    }

    /// Algebraic (β-rate) regime with noise scale ε. Same defaults.
    pub fn slow(beta: f64, gamma: f64, eps: f64) -> Result<Self> {
        Self::new(Some(beta), None, gamma, 1.0, eps, 0.05, 0.05, 0.0)
    }

    /// Fully explicit constructor.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta: Option<f64>,
        kappa: Option<f64>,
        gamma: f64,
        rho: f64,
        eps: f64,
        alpha: f64,
        delta: f64,
        inner_radius: f64,
    ) -> Result<Self> {
        match (beta, kappa) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::validation(
                    "exactly one of beta (algebraic) and kappa (geometric) must be given",
                ))
            }
            (Some(b), None) if !(b.is_finite() && b > 0.0) => {
                return Err(Error::validation(format!("beta must be > 0, got {b}")))
            }
            (None, Some(k)) if !(k.is_finite() && k > 0.0 && k < 1.0) => {
                return Err(Error::validation(format!("kappa must lie in (0,1), got {k}")))
            }
            _ => {}
        }
        if !gamma.is_finite() {
            return Err(Error::validation("gamma must be finite"));
        }
        for (name, v) in [("rho", rho), ("eps", eps), ("alpha", alpha), ("delta", delta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(inner_radius.is_finite() && inner_radius >= 0.0) {
            return Err(Error::validation(format!(
                "inner_radius must be >= 0, got {inner_radius}"
            )));
        }
        if inner_radius >= rho {
            return Err(Error::validation(format!(
                "inner_radius {inner_radius} must stay below the ball radius {rho}"
            )));
        }
        Ok(RegimeParams { beta, kappa, gamma, rho, eps, alpha, delta, inner_radius })
    }

    /// Replaces the localization slack α.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::validation(format!("alpha must be > 0, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Replaces the ball radius ρ.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0 && self.inner_radius < rho) {
            return Err(Error::validation(format!("rho must be > 0 and above the inner radius, got {rho}")));
        }
        self.rho = rho;
        Ok(self)
    }

    /// Replaces the measured inner instability radius r̃ₙ.
    pub fn with_inner_radius(mut self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0 && r < self.rho) {
            return Err(Error::validation(format!(
                "inner_radius must lie in [0, rho), got {r}"
            )));
        }
        self.inner_radius = r;
        Ok(self)
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// Geometric contraction?
    pub fn is_fast(&self) -> bool {
        self.kappa.is_some()
    }

    /// Shrinking perturbations near the fixed point?
    pub fn is_stable(&self) -> bool {
        self.gamma >= 0.0
    }
}

/// Predicted statistical radius and iteration budget for a regime:
///
/// * algebraic + stable: radius ε^{β/(1+β−γβ) − α}, budget
///   ε^{−1/(1+β−γβ)}·log(1/α);
/// * geometric + unstable: radius max{((2−κ)/(1−κ))·ε^{1/(1+|γ|)}, r̃ₙ},
///   budget log(ρ/ε)/((1+|γ|)·log(1/κ));
/// * algebraic + unstable: radius max{ε^{β/(1+β−γβ)}, r̃ₙ}, budget
///   ε^{−1/(1+β)};
/// * geometric + stable: radius ε, budget log(1/ε).
pub fn predicted_radius(regime: &RegimeParams) -> Result<RadiusPrediction> {
    let gamma = regime.gamma;
    let eps = regime.eps;
    match (regime.beta, regime.kappa, regime.is_stable()) {
        (Some(beta), None, true) => {
            if gamma * beta > 1.0 {
                return Err(Error::validation(format!(
                    "the algebraic stable regime requires gamma <= 1/beta; got gamma = {gamma}, beta = {beta}"
                )));
            }
            if eps >= 1.0 {
                return Err(Error::validation(format!(
                    "noise scale eps must lie in (0,1), got {eps}"
                )));
            }
            let denom = 1.0 + beta - gamma * beta;
            let exponent = beta / denom - regime.alpha;
            if exponent <= 0.0 {
                return Err(Error::validation(format!(
                    "alpha = {} must stay below the radius exponent beta/(1+beta-gamma*beta) = {}",
                    regime.alpha,
                    beta / denom
                )));
            }
            Ok(RadiusPrediction {
                radius: eps.powf(exponent),
                iteration_budget: eps.powf(-1.0 / denom) * (1.0 / regime.alpha).ln(),
            })
        }
        (None, Some(kappa), false) => {
            let budget = fast_unstable_iteration_bound(kappa, gamma, eps, regime.rho)?;
            let radius =
                ((2.0 - kappa) / (1.0 - kappa)) * eps.powf(1.0 / (1.0 + gamma.abs()));
            Ok(RadiusPrediction {
                radius: radius.max(regime.inner_radius),
                iteration_budget: budget,
            })
        }
        (Some(beta), None, false) => {
            if eps >= 1.0 {
                return Err(Error::validation(format!(
                    "noise scale eps must lie in (0,1), got {eps}"
                )));
            }
            let denom = 1.0 + beta - gamma * beta; // gamma < 0, so this exceeds 1 + beta
            Ok(RadiusPrediction {
                radius: eps.powf(beta / denom).max(regime.inner_radius),
                iteration_budget: eps.powf(-1.0 / (1.0 + beta)),
            })
        }
        (None, Some(_), true) => {
            if eps >= 1.0 {
                return Err(Error::validation(format!(
                    "noise scale eps must lie in (0,1), got {eps}"
                )));
            }
            Ok(RadiusPrediction { radius: eps, iteration_budget: (1.0 / eps).ln() })
        }
        _ => unreachable!("constructor guarantees exactly one rate parameter"),
    }
}

/// Iterations a geometric scheme needs before an unstable perturbation
/// field takes over: log(ρ/ε)/((1+|γ|)·log(1/κ)).
pub fn fast_unstable_iteration_bound(kappa: f64, gamma: f64, eps: f64, rho: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0 && kappa < 1.0) {
        return Err(Error::validation(format!("kappa must lie in (0,1), got {kappa}")));
    }
    if gamma >= 0.0 || !gamma.is_finite() {
        return Err(Error::validation(format!(
            "this bound is for unstable regimes: gamma must be < 0, got {gamma}"
        )));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::validation(format!("rho must be > 0, got {rho}")));
    }
    if !(eps.is_finite() && eps > 0.0 && eps <= rho) {
        return Err(Error::validation(format!(
            "eps must lie in (0, rho]; got eps = {eps}, rho = {rho}"
        )));
    }
    Ok((rho / eps).ln() / ((1.0 + gamma.abs()) * (1.0 / kappa).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_rate_parameter() {
        assert!(RegimeParams::new(Some(0.5), Some(0.5), 0.0, 1.0, 0.1, 0.05, 0.05, 0.0).is_err());
        assert!(RegimeParams::new(None, None, 0.0, 1.0, 0.1, 0.05, 0.05, 0.0).is_err());
        assert!(RegimeParams::slow(0.5, 1.0, 0.1).is_ok());
        assert!(RegimeParams::fast(0.5, -1.0, 0.1).is_ok());
    }

    #[test]
    fn range_validation() {
        assert!(RegimeParams::fast(1.0, -1.0, 0.1).is_err()); // kappa = 1
        assert!(RegimeParams::slow(0.0, 1.0, 0.1).is_err()); // beta = 0
        assert!(RegimeParams::slow(0.5, 1.0, 0.0).is_err()); // eps = 0
        let r = RegimeParams::slow(0.5, 1.0, 0.1).unwrap();
        assert!(r.with_inner_radius(2.0).is_err()); // above rho = 1
        assert!(r.with_alpha(0.0).is_err());
    }

    #[test]
    fn algebraic_stable_quarter_rate() {
        // β = 1/2, γ = 1, ε = n^{−1/2}: radius exponent 1/2 of ε (n^{−1/4}
        // as α → 0) and budget ε^{−1} (n^{1/2}).
        let n: f64 = 1e4;
        let eps = n.powf(-0.5);
        let alpha = 1e-9;
        let r = RegimeParams::slow(0.5, 1.0, eps).unwrap().with_alpha(alpha).unwrap();
        let pred = predicted_radius(&r).unwrap();
        assert!((pred.radius - n.powf(-0.25)).abs() / n.powf(-0.25) < 1e-3);
        assert!((pred.iteration_budget - eps.powf(-1.0) * (1.0 / alpha).ln()).abs() < 1e-9);
    }

    #[test]
    fn geometric_unstable_prediction() {
        // κ = 2/3, γ = −1: radius 4·√ε, budget log(ρ/ε)/(2 log(3/2)).
        let eps = 1e-3;
        let r = RegimeParams::fast(2.0 / 3.0, -1.0, eps).unwrap();
        let pred = predicted_radius(&r).unwrap();
        assert!((pred.radius - 4.0 * eps.sqrt()).abs() < 1e-12);
        let expect = (1.0 / eps).ln() / (2.0 * 1.5f64.ln());
        assert!((pred.iteration_budget - expect).abs() < 1e-12);
        // The measured inner radius wins when it is larger.
        let r2 = r.with_inner_radius(0.5).unwrap();
        assert_eq!(predicted_radius(&r2).unwrap().radius, 0.5);
    }

    #[test]
    fn algebraic_unstable_prediction() {
        // β = 1/2, γ = −1, ε = n^{−1/2}: radius exponent 1/4 of ε
        // (n^{−1/8}), budget ε^{−2/3} (n^{1/3}).
        let n: f64 = 256.0;
        let eps = n.powf(-0.5);
        let r = RegimeParams::slow(0.5, -1.0, eps).unwrap();
        let pred = predicted_radius(&r).unwrap();
        assert!((pred.radius - n.powf(-0.125)).abs() < 1e-12);
        assert!((pred.iteration_budget - n.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn geometric_stable_prediction() {
        let r = RegimeParams::fast(0.5, 0.0, 1e-4).unwrap();
        let pred = predicted_radius(&r).unwrap();
        assert_eq!(pred.radius, 1e-4);
        assert!((pred.iteration_budget - (1e4f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn radius_is_monotone_in_n() {
        // With ε = n^{−1/2} the predicted radius never grows as n grows.
        let regimes: Vec<Box<dyn Fn(f64) -> RegimeParams>> = vec![
            Box::new(|eps| RegimeParams::slow(0.5, 1.0, eps).unwrap()),
            Box::new(|eps| RegimeParams::slow(1.0, 0.5, eps).unwrap()),
            Box::new(|eps| RegimeParams::fast(0.5, -1.0, eps).unwrap()),
            Box::new(|eps| RegimeParams::slow(0.5, -1.0, eps).unwrap()),
            Box::new(|eps| RegimeParams::fast(0.5, 0.5, eps).unwrap()),
        ];
        for make in &regimes {
            let mut last = f64::INFINITY;
            for k in 2..14 {
                let n = (1u64 << k) as f64;
                let pred = predicted_radius(&make(n.powf(-0.5))).unwrap();
                assert!(pred.radius <= last + 1e-15, "radius grew at n = {n}");
                last = pred.radius;
            }
        }
    }

    #[test]
    fn alpha_cannot_swallow_the_exponent() {
        let r = RegimeParams::slow(0.5, 1.0, 0.01).unwrap().with_alpha(0.5).unwrap();
        // exponent would be 1/2 − 1/2 = 0.
        assert!(predicted_radius(&r).is_err());
    }

    #[test]
    fn iteration_bound_hand_values() {
        // κ = 1/2, γ = −1, ρ = 1, ε = 1/16: log 16/(2 log 2) = 2.
        let b = fast_unstable_iteration_bound(0.5, -1.0, 1.0 / 16.0, 1.0).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
        // ε = ρ gives zero iterations.
        assert_eq!(fast_unstable_iteration_bound(0.5, -1.0, 1.0, 1.0).unwrap(), 0.0);
        // Halving ε adds exactly log2/((1+|γ|)·log(1/κ)).
        let b1 = fast_unstable_iteration_bound(0.7, -2.0, 0.01, 1.0).unwrap();
        let b2 = fast_unstable_iteration_bound(0.7, -2.0, 0.005, 1.0).unwrap();
        let inc = 2.0f64.ln() / (3.0 * (1.0 / 0.7f64).ln());
        assert!((b2 - b1 - inc).abs() < 1e-12);
    }

    #[test]
    fn iteration_bound_rejects_bad_inputs() {
        assert!(fast_unstable_iteration_bound(1.0, -1.0, 0.1, 1.0).is_err());
        assert!(fast_unstable_iteration_bound(0.5, 0.0, 0.1, 1.0).is_err());
        assert!(fast_unstable_iteration_bound(0.5, -1.0, 2.0, 1.0).is_err());
    }
}
