//! Informative non-response: a survey response Y ~ N(0,1) is observed only
//! when its indicator R fires, and the miss probability depends on the value
//! of Y itself through the parameter θ. The truth θ* = 0 makes the Fisher
//! information vanish, so the likelihood is singular at the optimum.
//!
//! With u = θ²+1, the marginal P(R=1) is 1/(2√u), and the analysis runs
//! through f(θ) = 1/(u·(2√u − 1)), which decreases from f(0)=1 to 0.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::util::bisect_root;

const LN_2: f64 = std::f64::consts::LN_2;

/// One survey record: the response value is retained only when observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Response {
    Observed(f64),
    Missing,
}

/// Dataset for the non-response model.
#[derive(Clone, Debug, PartialEq)]
pub struct NonResponseData {
    records: Vec<Response>,
}

/// Sufficient statistics: the whole likelihood depends on the data only
/// through these two means.
#[derive(Clone, Copy, Debug)]
pub struct NonResponseStats {
    /// mean of R·Y².
    pub a: f64,
    /// mean of (1−R), the miss fraction.
    pub b: f64,
}

impl NonResponseData {
    pub fn new(records: Vec<Response>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("non-response data must have n >= 1"));
        }
        if records.iter().any(|r| match r {
            Response::Observed(y) => !y.is_finite(),
            Response::Missing => false,
        }) {
            return Err(Error::non_finite("non-finite response value in dataset"));
        }
        Ok(NonResponseData { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Response] {
        &self.records
    }

    pub fn stats(&self) -> NonResponseStats {
        let n = self.records.len() as f64;
        let mut a = 0.0;
        let mut miss = 0usize;
        for r in &self.records {
            match r {
                Response::Observed(y) => a += y * y,
                Response::Missing => miss += 1,
            }
        }
        NonResponseStats { a: a / n, b: miss as f64 / n }
    }
}

/// Draws n records: Y ~ N(0,1) and R | Y ~ Bernoulli(exp(−θ*²y²/2 − log 2)).
/// At θ* = 0 the indicator is a fair coin independent of Y.
pub fn gen_nonresponse(n: usize, theta_star: f64, seed: u64) -> Result<NonResponseData> {
    if n == 0 {
        return Err(Error::validation("n must be >= 1"));
    }
    if !theta_star.is_finite() {
        return Err(Error::non_finite("theta_star must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let y: f64 = rng.sample(StandardNormal);
        let p_observe = (-theta_star * theta_star * y * y / 2.0 - LN_2).exp();
        let u: f64 = rng.gen();
        records.push(if u < p_observe {
            Response::Observed(y)
        } else {
            Response::Missing
        });
    }
    NonResponseData::new(records)
}

/// f(θ) = 1/((θ²+1)(2√(θ²+1) − 1)); strictly decreasing in |θ| with f(0)=1.
pub(crate) fn shape_f(theta: f64) -> f64 {
    let u = theta * theta + 1.0;
    let v = 2.0 * u.sqrt() - 1.0;
    1.0 / (u * v)
}

/// f'(θ) = −2θ(3√u − 1)/(u²v²).
pub(crate) fn shape_f_prime(theta: f64) -> f64 {
    let u = theta * theta + 1.0;
    let su = u.sqrt();
    let v = 2.0 * su - 1.0;
    -2.0 * theta * (3.0 * su - 1.0) / (u * u * v * v)
}

/// Negated sample log-likelihood and its derivatives, given the sufficient
/// statistics. Minimization convention.
pub(crate) fn sample_eval(stats: NonResponseStats, theta: f64) -> (f64, f64, f64) {
    let NonResponseStats { a, b } = stats;
    let rbar = 1.0 - b;
    let u = theta * theta + 1.0;
    let tail = 1.0 - 1.0 / (2.0 * u.sqrt());
    let f = shape_f(theta);
    let value = (a * u + 2.0 * LN_2 * rbar) / 2.0 - b * tail.ln();
    let grad = theta * (a - b * f);
    let hess = a - b * (f + theta * shape_f_prime(theta));
    (value, grad, hess)
}

/// Population objective: the infinite-sample limit of `sample_eval`
/// (statistics a = b = 1/2 at θ* = 0).
pub(crate) fn population_eval(theta: f64) -> (f64, f64, f64) {
    sample_eval(NonResponseStats { a: 0.5, b: 0.5 }, theta)
}

/// Nonnegative sample MLE.
///
/// The likelihood is even; its curvature at 0 is a − b. When a ≥ b the
/// origin is the global optimum; otherwise the optimum is the unique
/// positive root of f(θ) = a/b, found by bisection (f is strictly
/// decreasing, so widening the upper end guarantees a bracket).
pub fn mle(data: &NonResponseData) -> Result<f64> {
    let NonResponseStats { a, b } = data.stats();
    if a >= b {
        return Ok(0.0);
    }
    if b == 0.0 {
        // a >= 0 = b was handled above.
        unreachable!("b = 0 implies a >= b");
    }
    let target = a / b;
    let g = |theta: f64| shape_f(theta) - target;
    let mut hi = 1.0;
    while g(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket(
                "no sign change for the non-response score equation".into(),
            ));
        }
    }
    Ok(bisect_root(g, 0.0, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_respects_fair_coin_at_zero() {
        let n = 40_000;
        let data = gen_nonresponse(n, 0.0, 7).unwrap();
        let stats = data.stats();
        let observed_frac = 1.0 - stats.b;
        // 3-sigma band for a Bernoulli(1/2) mean.
        let band = 3.0 * (0.25 / n as f64).sqrt();
        assert!((observed_frac - 0.5).abs() < band, "observed {observed_frac}");
    }

    #[test]
    fn observed_y_second_moment_matches_half() {
        // E[R·Y²] = E[Y²]/2 = 1/2 at θ* = 0 by independence.
        let data = gen_nonresponse(100_000, 0.0, 11).unwrap();
        assert!((data.stats().a - 0.5).abs() < 0.02);
    }

    #[test]
    fn rejects_empty() {
        assert!(gen_nonresponse(0, 0.0, 1).is_err());
        assert!(NonResponseData::new(vec![]).is_err());
    }

    #[test]
    fn nonzero_theta_star_suppresses_large_responses() {
        // Large |y| is observed less often when θ* != 0, so the retained
        // second moment drops below the θ*=0 value.
        let data = gen_nonresponse(100_000, 1.0, 3).unwrap();
        assert!(data.stats().a < 0.3);
    }

    #[test]
    fn shape_function_decreases_from_one() {
        assert_eq!(shape_f(0.0), 1.0);
        let mut last = 1.0;
        for i in 1..=50 {
            let v = shape_f(i as f64 * 0.1);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn mle_is_zero_in_the_unimodal_case() {
        // All responses observed with big magnitudes: a > b = small.
        let data = NonResponseData::new(vec![
            Response::Observed(2.0),
            Response::Observed(-1.5),
            Response::Missing,
        ])
        .unwrap();
        assert_eq!(mle(&data).unwrap(), 0.0);
    }

    #[test]
    fn mle_solves_the_score_equation() {
        // Heavy missingness with small observed values forces a < b.
        let data = NonResponseData::new(vec![
            Response::Observed(0.3),
            Response::Missing,
            Response::Missing,
            Response::Missing,
        ])
        .unwrap();
        let root = mle(&data).unwrap();
        assert!(root > 0.0);
        let NonResponseStats { a, b } = data.stats();
        assert!((shape_f(root) - a / b).abs() < 1e-12);
        // The objective gradient vanishes there.
        let (_, grad, _) = sample_eval(data.stats(), root);
        assert!(grad.abs() < 1e-12);
    }
}
