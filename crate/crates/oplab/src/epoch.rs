//! Epoch-doubling localization schedule for algebraically convergent
//! schemes under stable perturbations.
//!
//! The analysis proceeds in epochs: during epoch ℓ the iterate is confined
//! to a ball of radius ε^{λ_ℓ}, and the budget for the epoch splits into a
//! burn-in phase T_ℓ⁽¹⁾ and a consolidation phase T_ℓ⁽²⁾. The localization
//! exponents obey the affine recursion λ_{ℓ+1} = b·λ_ℓ + b′ with
//! b = βγ/(1+β) and b′ = β/(1+β), whose fixed point ν* = β/(1+β−γβ) is the
//! exponent of the achievable statistical radius. Running ℓ_α = ⌈log(1/α)⌉
//! epochs lands within ε^{ν*−α} of the fixed point.

use crate::error::{Error, Result};

/// A fully materialized localization schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochSchedule {
    beta: f64,
    gamma: f64,
    eps: f64,
    alpha: f64,
    c2: f64,
    b: f64,
    b_prime: f64,
    nu_star: f64,
    lambdas: Vec<f64>,
    phase_one: Vec<f64>,
    phase_two: Vec<f64>,
    lengths: Vec<u64>,
    cumulative: Vec<u64>,
}

impl EpochSchedule {
    /// Localization exponents λ₀ … λ_{ℓ_α} (one more entry than epochs).
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Per-epoch iteration counts T₁ … T_{ℓ_α} (after the ceiling).
    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    /// Real-valued burn-in phase lengths T_ℓ⁽¹⁾ before the ceiling.
    pub fn phase_one(&self) -> &[f64] {
        &self.phase_one
    }

    /// Real-valued consolidation phase lengths T_ℓ⁽²⁾ before the ceiling.
    pub fn phase_two(&self) -> &[f64] {
        &self.phase_two
    }

    /// Cumulative iteration counts S₁ … S_{ℓ_α}.
    pub fn cumulative(&self) -> &[u64] {
        &self.cumulative
    }

    /// Number of epochs ℓ_α = ⌈log(1/α)⌉.
    pub fn num_epochs(&self) -> usize {
        self.lengths.len()
    }

    /// Total iteration budget S_{ℓ_α}.
    pub fn total_iterations(&self) -> u64 {
        *self.cumulative.last().expect("at least one epoch")
    }

    /// Recursion slope b = βγ/(1+β).
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Recursion offset b′ = β/(1+β).
    pub fn b_prime(&self) -> f64 {
        self.b_prime
    }

    /// Limiting exponent ν* = β/(1+β−γβ).
    pub fn nu_star(&self) -> f64 {
        self.nu_star
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }
}

/// Builds the epoch schedule for an algebraic-stable regime.
///
/// Phase lengths follow T_ℓ⁽¹⁾ = C·ε^{−(λ_{ℓ−1}γ+1)/(1+β)} and
/// T_ℓ⁽²⁾ = C′·ε^{−(λ_ℓγ+1)/(1+β)} with C = (c₂·2^γ)^{−1/(1+β)} and
/// C′ = C^{(1+β−βγ)/(1+β)}; the per-epoch count is T_ℓ = ⌈T_ℓ⁽¹⁾+T_ℓ⁽²⁾⌉.
/// `c2` is the stability constant of the perturbation bound; it only
/// rescales epoch lengths, and 1.0 is the neutral choice.
pub fn epoch_schedule(beta: f64, gamma: f64, eps: f64, alpha: f64, c2: f64) -> Result<EpochSchedule> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::validation(format!("beta must be > 0, got {beta}")));
    }
    if !(gamma.is_finite() && gamma >= 0.0 && gamma * beta <= 1.0) {
        return Err(Error::validation(format!(
            "gamma must lie in [0, 1/beta] = [0, {}], got {gamma}",
            1.0 / beta
        )));
    }
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
        return Err(Error::validation(format!("eps must lie in (0,1), got {eps}")));
    }
    let nu_star = beta / (1.0 + beta - gamma * beta);
    if !(alpha.is_finite() && alpha > 0.0 && alpha < nu_star) {
        return Err(Error::validation(format!(
            "alpha must lie in (0, beta/(1+beta-gamma*beta)) = (0, {nu_star}), got {alpha}"
        )));
    }
    if !(c2.is_finite() && c2 > 0.0) {
        return Err(Error::validation(format!("c2 must be > 0, got {c2}")));
    }

    let b = beta * gamma / (1.0 + beta);
    let b_prime = beta / (1.0 + beta);
    let big_c = (c2 * 2f64.powf(gamma)).powf(-1.0 / (1.0 + beta));
    let big_c_prime = big_c.powf((1.0 + beta - beta * gamma) / (1.0 + beta));

    let num_epochs = (1.0 / alpha).ln().ceil() as usize;
    debug_assert!(num_epochs >= 1, "alpha < nu_star <= 1 forces at least one epoch");

    let mut lambdas = Vec::with_capacity(num_epochs + 1);
    lambdas.push(0.0);
    for ell in 0..num_epochs {
        lambdas.push(b * lambdas[ell] + b_prime);
    }

    let mut phase_one = Vec::with_capacity(num_epochs);
    let mut phase_two = Vec::with_capacity(num_epochs);
    let mut lengths = Vec::with_capacity(num_epochs);
    let mut cumulative = Vec::with_capacity(num_epochs);
    let mut running: u64 = 0;
    for ell in 1..=num_epochs {
        let t1 = big_c * eps.powf(-(lambdas[ell - 1] * gamma + 1.0) / (1.0 + beta));
        let t2 = big_c_prime * eps.powf(-(lambdas[ell] * gamma + 1.0) / (1.0 + beta));
        let total = t1 + t2;
        if !total.is_finite() || total > 1e18 {
            return Err(Error::validation(format!(
                "epoch {ell} would need {total:.3e} iterations; loosen eps, gamma or alpha"
            )));
        }
        let t = total.ceil() as u64;
        running = running
            .checked_add(t)
            .ok_or_else(|| Error::validation("cumulative epoch budget overflows u64"))?;
        phase_one.push(t1);
        phase_two.push(t2);
        lengths.push(t);
        cumulative.push(running);
    }

    Ok(EpochSchedule {
        beta,
        gamma,
        eps,
        alpha,
        c2,
        b,
        b_prime,
        nu_star,
        lambdas,
        phase_one,
        phase_two,
        lengths,
        cumulative,
    })
}
