//! Symmetric two-component Gaussian location mixture fit at the singular
//! truth: the data are X ~ ½N(θ*, I) + ½N(−θ*, I) with θ* = 0, so the two
//! components coincide and the model is over-specified. The negated
//! log-likelihood (constants dropped) is ‖θ‖²/2 − mean log cosh(θᵀx), and
//! the EM update is the fixed-point map θ ↦ mean(x·tanh(θᵀx)).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quad::{gauss_hermite_expect, DEFAULT_ORDER};
use crate::util::bisect_root;

/// Mixture observations, stored row-major (n rows of dimension d).
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureData {
    d: usize,
    rows: Vec<f64>,
}

impl MixtureData {
    pub fn new(d: usize, rows: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::validation("mixture dimension must be >= 1"));
        }
        if rows.is_empty() || rows.len() % d != 0 {
            return Err(Error::validation(format!(
                "mixture data length {} is not a positive multiple of d = {d}",
                rows.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("non-finite observation in mixture data"));
        }
        Ok(MixtureData { d, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len() / self.d
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.d)
    }
}

/// Draws n observations from the singular truth θ* = 0, i.e. X ~ N(0, I_d).
pub fn gen_mixture(n: usize, d: usize, seed: u64) -> Result<MixtureData> {
    if n == 0 {
        return Err(Error::validation("n must be >= 1"));
    }
    if d == 0 {
        return Err(Error::validation("d must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    MixtureData::new(d, rows)
}

/// log cosh t, computed as |t| + log1p(e^{−2|t|}) − log 2 so that large |t|
/// neither overflows nor loses the linear tail.
pub(crate) fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// sech²t without forming cosh t (which overflows past |t| ≈ 710).
pub(crate) fn sech_sq(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    let s = 2.0 * e / (1.0 + e * e);
    s * s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample objective (negated log-likelihood, additive constants dropped):
/// returns (value, gradient, row-major Hessian).
pub(crate) fn sample_eval(data: &MixtureData, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let d = data.dim();
    let n = data.n() as f64;
    let mut mean_logcosh = 0.0;
    let mut mean_xtanh = vec![0.0; d];
    let mut mean_xx_sech = vec![0.0; d * d];
    for x in data.rows() {
        let t = dot(theta, x);
        mean_logcosh += log_cosh(t);
        let th = t.tanh();
        let s2 = sech_sq(t);
        for i in 0..d {
            mean_xtanh[i] += x[i] * th;
            for j in 0..d {
                mean_xx_sech[i * d + j] += x[i] * x[j] * s2;
            }
        }
    }
    mean_logcosh /= n;
    for v in &mut mean_xtanh {
        *v /= n;
    }
    for v in &mut mean_xx_sech {
        *v /= n;
    }

    let sq_norm: f64 = theta.iter().map(|v| v * v).sum();
    let value = sq_norm / 2.0 - mean_logcosh;
    let grad: Vec<f64> = theta.iter().zip(&mean_xtanh).map(|(t, m)| t - m).collect();
    let mut hess = mean_xx_sech;
    for v in &mut hess {
        *v = -*v;
    }
    for i in 0..d {
        hess[i * d + i] += 1.0;
    }
    (value, grad, hess)
}

/// Sample EM fixed-point map θ ↦ (1/n) Σ xᵢ tanh(θᵀxᵢ). Valid in any
/// dimension; coincides with a unit-step gradient descent on the sample
/// objective.
pub(crate) fn sample_em_map(data: &MixtureData, theta: &[f64]) -> Vec<f64> {
    let d = data.dim();
    let n = data.n() as f64;
    let mut out = vec![0.0; d];
    for x in data.rows() {
        let th = dot(theta, x).tanh();
        for i in 0..d {
            out[i] += x[i] * th;
        }
    }
    for v in &mut out {
        *v /= n;
    }
    out
}

/// Population objective for d = 1 under X ~ N(0,1), via Gauss-Hermite
/// quadrature: (value, gradient, second derivative).
pub(crate) fn population_eval(theta: f64) -> Result<(f64, f64, f64)> {
    let e_logcosh = gauss_hermite_expect(|z| log_cosh(theta * z), DEFAULT_ORDER)?;
    let e_xtanh = population_em_map(theta)?;
    let e_xx_sech = gauss_hermite_expect(|z| z * z * sech_sq(theta * z), DEFAULT_ORDER)?;
    Ok((
        theta * theta / 2.0 - e_logcosh,
        theta - e_xtanh,
        1.0 - e_xx_sech,
    ))
}

/// Population EM map E[X tanh(θX)], X ~ N(0,1), for the scalar model.
pub(crate) fn population_em_map(theta: f64) -> Result<f64> {
    gauss_hermite_expect(|z| z * (theta * z).tanh(), DEFAULT_ORDER)
}

/// Nonnegative scalar MLE.
///
/// The sample objective is even with curvature 1 − mean(x²) at the origin.
/// When mean(x²) ≤ 1 the origin is the global minimizer; otherwise the
/// minimizer is the unique positive fixed point of the EM map, equivalently
/// the positive root of g(θ) = θ − mean(x tanh(θx)), which is bracketed by
/// (0, max|x|] because |tanh| < 1.
pub fn mle(data: &MixtureData) -> Result<f64> {
    if data.dim() != 1 {
        return Err(Error::validation(
            "the mixture closed-form estimator is defined for d = 1 only",
        ));
    }
    let n = data.n() as f64;
    let second_moment: f64 = data.rows.iter().map(|x| x * x).sum::<f64>() / n;
    if second_moment <= 1.0 {
        return Ok(0.0);
    }
    let g = |theta: f64| theta - data.rows.iter().map(|x| x * (theta * x).tanh()).sum::<f64>() / n;
    let hi = data.rows.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // g < 0 just right of the origin (slope 1 − mean x² < 0) and g(hi) > 0.
    let lo = 1e-12 * hi.max(1.0);
    if g(lo) >= 0.0 {
        // Degenerate only when mean(x²) is within rounding of 1; the origin
        // is then statistically indistinguishable from the root.
        return Ok(0.0);
    }
    Ok(bisect_root(g, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em_map_matches_hand_value() {
        // x = [2, -2], θ = 1: mean(x tanh(x)) = 2 tanh(2).
        let data = MixtureData::new(1, vec![2.0, -2.0]).unwrap();
        let out = sample_em_map(&data, &[1.0]);
        assert!((out[0] - 2.0 * 2.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn em_step_is_unit_gradient_descent() {
        let data = gen_mixture(200, 3, 5).unwrap();
        let theta = [0.3, -0.1, 0.2];
        let em = sample_em_map(&data, &theta);
        let (_, grad, _) = sample_eval(&data, &theta);
        for i in 0..3 {
            assert!((em[i] - (theta[i] - grad[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn scalar_mle_solves_the_fixed_point() {
        let data = MixtureData::new(1, vec![2.0, -2.0]).unwrap();
        let root = mle(&data).unwrap();
        // θ = 2 tanh(2θ) has its positive solution just below 2.
        assert!((root - 1.99866).abs() < 2e-5, "root {root}");
        let g = root - 2.0 * (2.0 * root).tanh();
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn scalar_mle_is_zero_for_underspread_data() {
        let data = MixtureData::new(1, vec![0.5, -0.5, 0.1]).unwrap();
        assert_eq!(mle(&data).unwrap(), 0.0);
    }

    #[test]
    fn log_cosh_is_stable_for_huge_arguments() {
        // cosh overflows near 710; the linear-tail form must not.
        let v = log_cosh(1e4);
        assert!((v - (1e4 - std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(log_cosh(0.0), 0.0);
    }

    #[test]
    fn sech_sq_matches_naive_in_safe_range() {
        for i in -20..=20 {
            let t = i as f64 * 0.3;
            let naive = 1.0 / t.cosh().powi(2);
            assert!((sech_sq(t) - naive).abs() < 1e-15);
        }
        assert_eq!(sech_sq(1e6), 0.0);
    }

    #[test]
    fn population_em_map_matches_series_bounds() {
        // x tanh(x) = x² − x⁴/3 + ... gives E[Z·tanh(θZ)] near θ=0.2
        // between 0.192 and 0.19264 (fourth-moment truncation bounds).
        let v = population_em_map(0.2).unwrap();
        assert!(v > 0.192 && v < 0.19264, "got {v}");
    }

    #[test]
    fn population_gradient_is_odd_and_vanishes_at_zero() {
        let (v0, g0, _) = population_eval(0.0).unwrap();
        assert_eq!(v0, 0.0);
        assert_eq!(g0, 0.0);
        let (_, gp, _) = population_eval(0.4).unwrap();
        let (_, gm, _) = population_eval(-0.4).unwrap();
        assert!((gp + gm).abs() < 1e-14);
    }

    #[test]
    fn population_curvature_at_zero_is_zero() {
        // E[X² sech²(0)] = E[X²] = 1, so the information vanishes at the
        // singular truth.
        let (_, _, h) = population_eval(0.0).unwrap();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn generator_shapes() {
        let data = gen_mixture(50, 3, 1).unwrap();
        assert_eq!(data.n(), 50);
        assert_eq!(data.dim(), 3);
        assert_eq!(data.row(0).len(), 3);
        assert!(gen_mixture(0, 1, 1).is_err());
        assert!(gen_mixture(5, 0, 1).is_err());
    }
}
