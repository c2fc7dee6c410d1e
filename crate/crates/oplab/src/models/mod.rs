//! The model zoo: three statistical estimation problems whose likelihoods
//! are singular at the truth, a deterministic power-law pair that mimics
//! their geometry exactly, and a one-dimensional instability example.
//!
//! Every family exposes the same interface: an objective with analytic
//! value, gradient and Hessian at two levels. The population level is the
//! infinite-sample limit in closed form (quadrature for the mixture); the
//! sample level is built from a concrete dataset or, for the deterministic
//! families, from an explicit perturbation.

pub mod counterexample;
mod io;
pub mod mixture;
pub mod nonresponse;
pub mod polynomial;
pub mod regression;

use std::sync::Arc;

pub use counterexample::CounterexampleSpec;
pub use io::{load_dataset, save_dataset};
pub use mixture::{gen_mixture, MixtureData};
pub use nonresponse::{gen_nonresponse, NonResponseData, Response};
pub use polynomial::PolynomialSpec;
pub use regression::{gen_regression, RegressionData};

use crate::error::{Error, Result};
use crate::point::ParamPoint;

/// Whether an objective is the infinite-sample limit or built from data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Population,
    Sample,
}

impl Level {
    pub fn name(&self) -> &'static str {
        match self {
            Level::Population => "population",
            Level::Sample => "sample",
        }
    }
}

/// A model family together with its fixed structural parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// Informative non-response survey model (always scalar).
    NonResponse,
    /// Over-specified Gaussian location mixture in dimension `d`.
    Mixture { d: usize },
    /// Flat-link non-linear regression in dimension `d` with exponent `p`
    /// (the regression surface is (xᵀθ)^{2p}).
    Regression { d: usize, p: u32 },
    /// Deterministic power-law pair.
    Polynomial(PolynomialSpec),
    /// Instability example with bump scale n^{−1/2}.
    Counterexample(CounterexampleSpec),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::NonResponse => "nonresponse",
            ModelSpec::Mixture { .. } => "mixture",
            ModelSpec::Regression { .. } => "regression",
            ModelSpec::Polynomial(_) => "polynomial",
            ModelSpec::Counterexample(_) => "counterexample",
        }
    }

    /// Parameter dimension.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::NonResponse | ModelSpec::Counterexample(_) => 1,
            ModelSpec::Mixture { d } | ModelSpec::Regression { d, .. } => *d,
            ModelSpec::Polynomial(spec) => spec.d,
        }
    }

    /// True for the families whose sample level is built from data.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            ModelSpec::NonResponse | ModelSpec::Mixture { .. } | ModelSpec::Regression { .. }
        )
    }

    /// Radius of the ball around the fixed point on which the family's
    /// operators are analysed. Iteration starting points and profiling
    /// radii are expected to stay inside this ball.
    pub fn rho(&self) -> f64 {
        1.0
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Mixture { d } | ModelSpec::Regression { d, .. } if *d == 0 => {
                Err(Error::validation("model dimension must be >= 1"))
            }
            ModelSpec::Regression { p: 0, .. } => {
                Err(Error::validation("link exponent p must be >= 1"))
            }
            _ => Ok(()),
        }
    }
}

/// A dataset for one of the statistical families.
#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    NonResponse(NonResponseData),
    Mixture(MixtureData),
    Regression(RegressionData),
}

impl Dataset {
    pub fn n(&self) -> usize {
        match self {
            Dataset::NonResponse(d) => d.len(),
            Dataset::Mixture(d) => d.n(),
            Dataset::Regression(d) => d.n(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Dataset::NonResponse(_) => 1,
            Dataset::Mixture(d) => d.dim(),
            Dataset::Regression(d) => d.dim(),
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self {
            Dataset::NonResponse(_) => "nonresponse",
            Dataset::Mixture(_) => "mixture",
            Dataset::Regression(_) => "regression",
        }
    }
}

/// Value, gradient and Hessian of an objective at one point. The Hessian is
/// stored row-major with `grad.len()²` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Kernel {
    NonResponsePopulation,
    NonResponseSample(nonresponse::NonResponseStats),
    MixturePopulation,
    MixtureSample(Arc<MixtureData>),
    RegressionPopulation { d: usize, p: u32 },
    RegressionSampleScalar { p: u32, moments: regression::ScalarMoments },
    RegressionSampleVector { p: u32, data: Arc<RegressionData> },
    Polynomial { spec: PolynomialSpec, perturbed: bool },
    Counterexample { c: f64 },
}

/// An objective bound to its level and (for sample levels) its data
/// summaries, reusable across many evaluations. Construction does all the
/// one-off work: validation and sufficient-statistic extraction.
#[derive(Clone, Debug)]
pub struct Objective {
    dim: usize,
    kernel: Kernel,
}

impl Objective {
    pub fn build(model: &ModelSpec, level: Level, data: Option<&Dataset>) -> Result<Self> {
        model.validate()?;
        let needs_data = model.is_statistical() && level == Level::Sample;
        if needs_data && data.is_none() {
            return Err(Error::validation(format!(
                "sample-level objective for model '{}' requires a dataset",
                model.name()
            )));
        }
        if !needs_data && data.is_some() {
            return Err(Error::validation(format!(
                "{} objective for model '{}' takes no dataset",
                level.name(),
                model.name()
            )));
        }
        if let Some(data) = data {
            if data.model_name() != model.name() {
                return Err(Error::validation(format!(
                    "dataset for model '{}' given to model '{}'",
                    data.model_name(),
                    model.name()
                )));
            }
            if data.dim() != model.dim() {
                return Err(Error::validation(format!(
                    "dataset dimension {} does not match model dimension {}",
                    data.dim(),
                    model.dim()
                )));
            }
        }

        let dim = model.dim();
        let kernel = match (model, level) {
            (ModelSpec::NonResponse, Level::Population) => Kernel::NonResponsePopulation,
            (ModelSpec::NonResponse, Level::Sample) => {
                let Some(Dataset::NonResponse(d)) = data else { unreachable!() };
                Kernel::NonResponseSample(d.stats())
            }
            (ModelSpec::Mixture { d }, Level::Population) => {
                if *d != 1 {
                    return Err(Error::validation(
                        "the population mixture objective is defined for d = 1 only",
                    ));
                }
                Kernel::MixturePopulation
            }
            (ModelSpec::Mixture { .. }, Level::Sample) => {
                let Some(Dataset::Mixture(d)) = data else { unreachable!() };
                Kernel::MixtureSample(Arc::new(d.clone()))
            }
            (ModelSpec::Regression { d, p }, Level::Population) => {
                Kernel::RegressionPopulation { d: *d, p: *p }
            }
            (ModelSpec::Regression { d, p }, Level::Sample) => {
                let Some(Dataset::Regression(rd)) = data else { unreachable!() };
                if *d == 1 {
                    Kernel::RegressionSampleScalar {
                        p: *p,
                        moments: regression::scalar_moments(rd, *p),
                    }
                } else {
                    Kernel::RegressionSampleVector { p: *p, data: Arc::new(rd.clone()) }
                }
            }
            (ModelSpec::Polynomial(spec), level) => Kernel::Polynomial {
                spec: *spec,
                perturbed: level == Level::Sample,
            },
            (ModelSpec::Counterexample(spec), level) => Kernel::Counterexample {
                c: match level {
                    Level::Population => 0.0,
                    Level::Sample => spec.bump_scale(),
                },
            },
        };
        Ok(Objective { dim, kernel })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates value, gradient and Hessian at θ.
    pub fn eval(&self, theta: &ParamPoint) -> Result<Eval> {
        if theta.dim() != self.dim {
            return Err(Error::validation(format!(
                "point has dimension {}, objective expects {}",
                theta.dim(),
                self.dim
            )));
        }
        let c = theta.coords();
        let eval = match &self.kernel {
            Kernel::NonResponsePopulation => scalar_eval(nonresponse::population_eval(c[0])),
            Kernel::NonResponseSample(stats) => {
                scalar_eval(nonresponse::sample_eval(*stats, c[0]))
            }
            Kernel::MixturePopulation => scalar_eval(mixture::population_eval(c[0])?),
            Kernel::MixtureSample(data) => tuple_eval(mixture::sample_eval(data, c)),
            Kernel::RegressionPopulation { d, p } => {
                tuple_eval(regression::population_eval(*d, *p, c))
            }
            Kernel::RegressionSampleScalar { p, moments } => {
                scalar_eval(regression::sample_eval_scalar(*moments, *p, c[0]))
            }
            Kernel::RegressionSampleVector { p, data } => {
                tuple_eval(regression::sample_eval(data, *p, c))
            }
            Kernel::Polynomial { spec, perturbed } => {
                tuple_eval(polynomial::eval(spec, *perturbed, c))
            }
            Kernel::Counterexample { c: bump } => scalar_eval(counterexample::eval(*bump, c[0])),
        };
        if !eval.value.is_finite()
            || eval.grad.iter().any(|v| !v.is_finite())
            || eval.hess.iter().any(|v| !v.is_finite())
        {
            return Err(Error::non_finite(format!(
                "objective evaluation at {theta} produced a non-finite quantity"
            )));
        }
        Ok(eval)
    }
}

fn scalar_eval((value, grad, hess): (f64, f64, f64)) -> Eval {
    Eval { value, grad: vec![grad], hess: vec![hess] }
}

fn tuple_eval((value, grad, hess): (f64, Vec<f64>, Vec<f64>)) -> Eval {
    Eval { value, grad, hess }
}

/// One-shot convenience wrapper: builds the objective and evaluates it.
pub fn objective(
    model: &ModelSpec,
    level: Level,
    data: Option<&Dataset>,
    theta: &ParamPoint,
) -> Result<Eval> {
    Objective::build(model, level, data)?.eval(theta)
}

/// Closed-form (or one-dimensional root-solved) sample optimizer for the
/// statistical families. All three are defined for scalar parameters; the
/// nonnegative representative of the symmetric optimizer pair is returned.
pub fn sample_mle(model: &ModelSpec, data: &Dataset) -> Result<ParamPoint> {
    model.validate()?;
    if !model.is_statistical() {
        return Err(Error::validation(format!(
            "model '{}' is deterministic: it has no sample optimizer to estimate",
            model.name()
        )));
    }
    if data.model_name() != model.name() {
        return Err(Error::validation(format!(
            "dataset for model '{}' given to model '{}'",
            data.model_name(),
            model.name()
        )));
    }
    let value = match (model, data) {
        (ModelSpec::NonResponse, Dataset::NonResponse(d)) => nonresponse::mle(d)?,
        (ModelSpec::Mixture { .. }, Dataset::Mixture(d)) => mixture::mle(d)?,
        (ModelSpec::Regression { p, .. }, Dataset::Regression(d)) => regression::mle(d, *p)?,
        _ => unreachable!("model/data agreement was checked above"),
    };
    ParamPoint::new(vec![value])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> ParamPoint {
        ParamPoint::scalar(x).unwrap()
    }

    #[test]
    fn population_needs_no_data_and_rejects_it() {
        let model = ModelSpec::NonResponse;
        assert!(Objective::build(&model, Level::Population, None).is_ok());
        let data = Dataset::NonResponse(gen_nonresponse(5, 0.0, 1).unwrap());
        let err = Objective::build(&model, Level::Population, Some(&data)).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn sample_level_requires_data() {
        let err = Objective::build(&ModelSpec::NonResponse, Level::Sample, None).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn dataset_model_mismatch_is_rejected() {
        let data = Dataset::Mixture(gen_mixture(5, 1, 1).unwrap());
        let err = Objective::build(&ModelSpec::NonResponse, Level::Sample, Some(&data));
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn dataset_dimension_mismatch_is_rejected() {
        let data = Dataset::Mixture(gen_mixture(5, 2, 1).unwrap());
        let err = Objective::build(&ModelSpec::Mixture { d: 3 }, Level::Sample, Some(&data));
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn population_mixture_is_scalar_only() {
        let err = Objective::build(&ModelSpec::Mixture { d: 2 }, Level::Population, None);
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn point_dimension_is_checked() {
        let obj = Objective::build(&ModelSpec::Regression { d: 2, p: 1 }, Level::Population, None)
            .unwrap();
        let err = obj.eval(&scalar(0.5)).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn single_missing_record_value() {
        // One record with r = 0: the objective at 0 is −log(1/2).
        let data =
            Dataset::NonResponse(NonResponseData::new(vec![Response::Missing]).unwrap());
        let e = objective(&ModelSpec::NonResponse, Level::Sample, Some(&data), &scalar(0.0))
            .unwrap();
        assert!((e.value - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(e.grad[0], 0.0);
    }

    #[test]
    fn nonresponse_population_gradient_at_one() {
        // gradient = θ(1 − f(θ))/2; at θ = 1: (1 − 1/(2(2√2−1)))/2.
        let e = objective(&ModelSpec::NonResponse, Level::Population, None, &scalar(1.0))
            .unwrap();
        let f = 1.0 / (2.0 * (2.0 * 2.0f64.sqrt() - 1.0));
        assert!((e.grad[0] - (1.0 - f) / 2.0).abs() < 1e-15);
        assert!((e.grad[0] - 0.363_270_5).abs() < 1e-6);
    }

    #[test]
    fn sample_limit_matches_population_nonresponse() {
        // With the exact limiting statistics a = b = 1/2 the sample kernel
        // must reproduce the population one, value included.
        let data = Dataset::NonResponse(
            NonResponseData::new(vec![
                Response::Observed(1.0),
                Response::Missing,
            ])
            .unwrap(),
        );
        // a = 1/2, b = 1/2 for this two-record set.
        for t in [-0.7, 0.0, 0.3, 1.2] {
            let s = objective(&ModelSpec::NonResponse, Level::Sample, Some(&data), &scalar(t))
                .unwrap();
            let p = objective(&ModelSpec::NonResponse, Level::Population, None, &scalar(t))
                .unwrap();
            assert!((s.value - p.value).abs() < 1e-15);
            assert!((s.grad[0] - p.grad[0]).abs() < 1e-15);
            assert!((s.hess[0] - p.hess[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn mle_dispatch() {
        let data = Dataset::Regression(
            RegressionData::new(1, vec![1.0, 1.0], vec![1.0, 3.0]).unwrap(),
        );
        let est = sample_mle(&ModelSpec::Regression { d: 1, p: 1 }, &data).unwrap();
        assert!((est.as_scalar() - 2.0f64.sqrt()).abs() < 1e-15);

        let err = sample_mle(
            &ModelSpec::Polynomial(PolynomialSpec::new(4.0, 2.0, 0.1, 1).unwrap()),
            &data,
        );
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn counterexample_levels_share_the_stationary_pair() {
        let model = ModelSpec::Counterexample(CounterexampleSpec::new(100).unwrap());
        for level in [Level::Population, Level::Sample] {
            for t in [0.0, 2.0] {
                let e = objective(&model, level, None, &scalar(t)).unwrap();
                assert!(e.value.abs() < 1e-12);
                assert!(e.grad[0].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_levels_differ_only_by_the_perturbation() {
        let spec = PolynomialSpec::new(4.0, 2.0, 0.1, 1).unwrap();
        let model = ModelSpec::Polynomial(spec);
        let pop = objective(&model, Level::Population, None, &scalar(2.0)).unwrap();
        let samp = objective(&model, Level::Sample, None, &scalar(2.0)).unwrap();
        assert!((pop.value - 4.0).abs() < 1e-14);
        assert!((samp.value - 3.8).abs() < 1e-14);
    }
}
