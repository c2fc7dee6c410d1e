//! Non-linear least squares with a flat link: responses follow
//! Y = (Xᵀθ*)^{2p} + ξ at the degenerate truth θ* = 0, so the regression
//! surface is maximally flat at the optimum and the curvature of the
//! population risk vanishes there to order 4p − 2.
//!
//! Population moments reduce to Gaussian double factorials: for
//! s = Xᵀθ ~ N(0, ‖θ‖²), E[s^{4p}] = (4p−1)!!·‖θ‖^{4p}.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::util::pow0;

/// Regression observations: covariate rows (n×d, row-major) and responses.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    d: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl RegressionData {
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::validation("regression dimension must be >= 1"));
        }
        if ys.is_empty() || xs.len() != ys.len() * d {
            return Err(Error::validation(format!(
                "regression data needs n >= 1 rows with {d} covariates; got {} covariate values for {} responses",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("non-finite entry in regression data"));
        }
        Ok(RegressionData { d, xs, ys })
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.xs.chunks_exact(self.d).zip(self.ys.iter().copied())
    }
}

/// Draws X ~ N(0, I_d) and Y = (Xᵀθ*)^{2p} + ξ with standard normal noise.
/// `theta_star = None` means the degenerate truth θ* = 0.
pub fn gen_regression(
    n: usize,
    d: usize,
    p: u32,
    theta_star: Option<&[f64]>,
    seed: u64,
) -> Result<RegressionData> {
    if n == 0 {
        return Err(Error::validation("n must be >= 1"));
    }
    if d == 0 {
        return Err(Error::validation("d must be >= 1"));
    }
    if p == 0 {
        return Err(Error::validation("link exponent p must be >= 1"));
    }
    if let Some(ts) = theta_star {
        if ts.len() != d {
            return Err(Error::validation(format!(
                "theta_star has {} coordinates, expected {d}",
                ts.len()
            )));
        }
        if ts.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("theta_star must be finite"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let row_start = xs.len();
        for _ in 0..d {
            xs.push(rng.sample::<f64, _>(StandardNormal));
        }
        let mean = match theta_star {
            Some(ts) => {
                let s: f64 = xs[row_start..].iter().zip(ts).map(|(x, t)| x * t).sum();
                s.powi(2 * p as i32)
            }
            None => 0.0,
        };
        let noise: f64 = rng.sample(StandardNormal);
        ys.push(mean + noise);
    }
    RegressionData::new(d, xs, ys)
}

/// (2k−1)!! for k = `half`: the 2k-th moment of a standard normal.
pub(crate) fn double_factorial_odd(k: u32) -> f64 {
    let mut acc = 1.0f64;
    let mut m = 2 * k as i64 - 1;
    while m > 1 {
        acc *= m as f64;
        m -= 2;
    }
    acc
}

/// Moments of the scalar sample objective; the whole d = 1 likelihood
/// depends on the data only through these three numbers.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ScalarMoments {
    /// mean of y².
    pub m_yy: f64,
    /// mean of y·x^{2p}.
    pub m_yx: f64,
    /// mean of x^{4p}.
    pub m_xx: f64,
}

pub(crate) fn scalar_moments(data: &RegressionData, p: u32) -> ScalarMoments {
    debug_assert_eq!(data.d, 1);
    let n = data.n() as f64;
    let mut m_yy = 0.0;
    let mut m_yx = 0.0;
    let mut m_xx = 0.0;
    for (x, y) in data.rows() {
        let x = x[0];
        let x2p = x.powi(2 * p as i32);
        m_yy += y * y;
        m_yx += y * x2p;
        m_xx += x2p * x2p;
    }
    ScalarMoments { m_yy: m_yy / n, m_yx: m_yx / n, m_xx: m_xx / n }
}

/// Scalar sample objective from precomputed moments:
/// (value, gradient, second derivative).
pub(crate) fn sample_eval_scalar(m: ScalarMoments, p: u32, theta: f64) -> (f64, f64, f64) {
    let p = p as i32;
    let w = theta.powi(2 * p);
    let value = 0.5 * (m.m_yy - 2.0 * w * m.m_yx + w * w * m.m_xx);
    let grad =
        2.0 * p as f64 * (theta.powi(4 * p - 1) * m.m_xx - theta.powi(2 * p - 1) * m.m_yx);
    let hess = 2.0 * p as f64
        * ((4 * p - 1) as f64 * theta.powi(4 * p - 2) * m.m_xx
            - (2 * p - 1) as f64 * theta.powi(2 * p - 2) * m.m_yx);
    (value, grad, hess)
}

/// General-dimension sample objective: (value, gradient, row-major Hessian).
pub(crate) fn sample_eval(
    data: &RegressionData,
    p: u32,
    theta: &[f64],
) -> (f64, Vec<f64>, Vec<f64>) {
    let d = data.dim();
    let n = data.n() as f64;
    let p = p as i32;
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for (x, y) in data.rows() {
        let s: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
        let s2p = s.powi(2 * p);
        let resid = y - s2p;
        value += resid * resid;
        let gcoef = s.powi(4 * p - 1) - y * s.powi(2 * p - 1);
        let hcoef = (4 * p - 1) as f64 * s.powi(4 * p - 2) - (2 * p - 1) as f64 * y * s.powi(2 * p - 2);
        for i in 0..d {
            grad[i] += gcoef * x[i];
            for j in 0..d {
                hess[i * d + j] += hcoef * x[i] * x[j];
            }
        }
    }
    value /= 2.0 * n;
    let scale = 2.0 * p as f64 / n;
    for v in &mut grad {
        *v *= scale;
    }
    for v in &mut hess {
        *v *= scale;
    }
    (value, grad, hess)
}

/// Population risk under X ~ N(0, I_d), Y = ξ: (value, gradient, Hessian).
/// Closed form through Gaussian moments; valid in any dimension.
pub(crate) fn population_eval(d: usize, p: u32, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let dfact = double_factorial_odd(2 * p);
    let two_p = 2.0 * p as f64;
    let r2: f64 = theta.iter().map(|v| v * v).sum();
    let e = p as f64;
    let value = 0.5 * (1.0 + dfact * pow0(r2, 2.0 * e));
    let gscale = two_p * dfact * pow0(r2, 2.0 * e - 1.0);
    let grad: Vec<f64> = theta.iter().map(|t| gscale * t).collect();
    // Hessian = 2p·(4p−1)!!·[r^{4p−2}·I + (4p−2)·r^{4p−4}·θθᵀ]; the θθᵀ
    // factor carries r^{4p−4} written as pow0 so the p = 1 origin (exponent
    // zero against a zero outer product) takes its analytic limit 0.
    let hscale_i = two_p * dfact * pow0(r2, 2.0 * e - 1.0);
    let hscale_outer = two_p * dfact * (4.0 * e - 2.0) * pow0(r2, 2.0 * e - 2.0);
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            hess[i * d + j] = hscale_outer * theta[i] * theta[j];
        }
        hess[i * d + i] += hscale_i;
    }
    (value, grad, hess)
}

/// Nonnegative scalar least-squares estimator.
///
/// In w = θ^{2p} the objective is the convex parabola
/// (m_yy − 2w·m_yx + w²·m_xx)/2 on w ≥ 0, minimized at
/// w = m_yx/m_xx when that is positive and at w = 0 otherwise.
pub fn mle(data: &RegressionData, p: u32) -> Result<f64> {
    if data.dim() != 1 {
        return Err(Error::validation(
            "the regression closed-form estimator is defined for d = 1 only",
        ));
    }
    if p == 0 {
        return Err(Error::validation("link exponent p must be >= 1"));
    }
    let m = scalar_moments(data, p);
    if m.m_xx == 0.0 {
        return Err(Error::validation(
            "all covariates are zero; the estimator is undefined",
        ));
    }
    if m.m_yx <= 0.0 {
        return Ok(0.0);
    }
    Ok((m.m_yx / m.m_xx).powf(1.0 / (2.0 * p as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(1), 1.0);
        assert_eq!(double_factorial_odd(2), 3.0);
        assert_eq!(double_factorial_odd(3), 15.0);
        assert_eq!(double_factorial_odd(4), 105.0);
    }

    #[test]
    fn population_values_at_p1() {
        // p = 1, θ = 1: value (1+3)/2, gradient 6θ³, curvature 18θ².
        let (v, g, h) = population_eval(1, 1, &[1.0]);
        assert_eq!(v, 2.0);
        assert_eq!(g[0], 6.0);
        assert_eq!(h[0], 18.0);
    }

    #[test]
    fn population_hessian_vanishes_at_origin() {
        for p in 1..=3 {
            let (_, g, h) = population_eval(2, p, &[0.0, 0.0]);
            assert_eq!(g, vec![0.0, 0.0]);
            assert_eq!(h, vec![0.0; 4]);
        }
    }

    #[test]
    fn population_hessian_outer_term() {
        // d = 2, p = 1, θ = (a, 0): H = 6[r²I + 2θθᵀ] gives diag(18a², 6a²).
        let a = 0.7f64;
        let (_, _, h) = population_eval(2, 1, &[a, 0.0]);
        assert!((h[0] - 18.0 * a * a).abs() < 1e-14);
        assert!((h[3] - 6.0 * a * a).abs() < 1e-14);
        assert_eq!(h[1], 0.0);
        assert_eq!(h[2], 0.0);
    }

    #[test]
    fn scalar_path_matches_general_path() {
        let data = gen_regression(64, 1, 2, None, 9).unwrap();
        let m = scalar_moments(&data, 2);
        for theta in [-1.3, -0.2, 0.0, 0.4, 1.1] {
            let (v1, g1, h1) = sample_eval_scalar(m, 2, theta);
            let (v2, g2, h2) = sample_eval(&data, 2, &[theta]);
            assert!((v1 - v2).abs() <= 1e-12 * v1.abs().max(1.0));
            assert!((g1 - g2[0]).abs() <= 1e-12 * g1.abs().max(1.0));
            assert!((h1 - h2[0]).abs() <= 1e-12 * h1.abs().max(1.0));
        }
    }

    #[test]
    fn single_record_hand_values() {
        // x = 1, y = 0, p = 1, θ = 2: value 8, gradient 16, curvature 24.
        let data = RegressionData::new(1, vec![1.0], vec![0.0]).unwrap();
        let (v, g, h) = sample_eval(&data, 1, &[2.0]);
        assert_eq!(v, 8.0);
        assert_eq!(g[0], 16.0);
        assert_eq!(h[0], 24.0);
    }

    #[test]
    fn estimator_solves_first_order_condition() {
        let data = RegressionData::new(1, vec![1.0, 1.0], vec![1.0, 3.0]).unwrap();
        let est = mle(&data, 1).unwrap();
        assert!((est - 2.0f64.sqrt()).abs() < 1e-15);
        let m = scalar_moments(&data, 1);
        let (_, g, _) = sample_eval_scalar(m, 1, est);
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn estimator_clamps_to_zero() {
        let data = RegressionData::new(1, vec![1.0, -1.0], vec![-1.0, -0.5]).unwrap();
        assert_eq!(mle(&data, 1).unwrap(), 0.0);
    }

    #[test]
    fn generator_with_nonzero_truth_shifts_responses() {
        let data = gen_regression(4000, 1, 1, Some(&[1.0]), 2).unwrap();
        // E[Y] = E[X²] = 1 when θ* = 1, p = 1.
        let mean = data.ys().iter().sum::<f64>() / data.n() as f64;
        assert!((mean - 1.0).abs() < 0.15, "mean {mean}");
    }
}
