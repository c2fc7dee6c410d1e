//! The optimization schemes under study, as single-step maps and as
//! [`Operator`]s ready for the iteration drivers.
//!
//! Four schemes: plain gradient descent, Newton's method, a cubically
//! regularized Newton variant, and the EM fixed-point update of the
//! Gaussian mixture. Each step function works on any objective that
//! furnishes the derivatives it needs; [`make_operator`] additionally
//! enforces which (model, algorithm) pairs are meaningful and supplies
//! model-specific default step sizes and regularization weights.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::solve_linear;
use crate::models::{
    mixture, regression, Dataset, Level, MixtureData, ModelSpec, Objective,
};
use crate::operator::Operator;
use crate::point::ParamPoint;

/// The iterative schemes the laboratory profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Gradient descent with a fixed step size.
    Gd,
    /// Newton's method (full step).
    Newton,
    /// Cubically regularized Newton: each step minimizes the local model
    /// ⟨g, s⟩ + sᵀHs/2 + L‖s‖³.
    Cnm,
    /// The EM fixed-point update for the Gaussian mixture.
    Em,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Gd, Algorithm::Newton, Algorithm::Cnm, Algorithm::Em];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Newton => "nm",
            Algorithm::Cnm => "cnm",
            Algorithm::Em => "em",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Algorithm::Gd),
            "nm" => Ok(Algorithm::Newton),
            "cnm" => Ok(Algorithm::Cnm),
            "em" => Ok(Algorithm::Em),
            other => Err(Error::validation(format!(
                "unknown algorithm '{other}' (expected gd, nm, cnm or em)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional overrides for algorithm parameters. Fields left `None` fall
/// back to the model-specific defaults listed on [`make_operator`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlgorithmConfig {
    /// Gradient-descent step size η.
    pub eta: Option<f64>,
    /// Cubic regularization weight L.
    pub cubic_l: Option<f64>,
}

/// One gradient step θ − η∇f(θ).
pub fn gd_step(obj: &Objective, theta: &ParamPoint, eta: f64) -> Result<ParamPoint> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::validation(format!("step size must be positive and finite, got {eta}")));
    }
    let e = obj.eval(theta)?;
    let next: Vec<f64> = theta
        .coords()
        .iter()
        .zip(&e.grad)
        .map(|(t, g)| t - eta * g)
        .collect();
    ParamPoint::new(next)
}

/// One full Newton step θ − H(θ)⁻¹∇f(θ). Numerically singular curvature
/// surfaces as [`Error::SingularHessian`]. The update is invariant to an
/// overall sign flip of the objective, so it serves maximization-convention
/// objectives unchanged.
pub fn newton_step(obj: &Objective, theta: &ParamPoint) -> Result<ParamPoint> {
    let e = obj.eval(theta)?;
    let delta = solve_linear(&e.hess, &e.grad, obj.dim(), theta.coords())?;
    let next: Vec<f64> = theta
        .coords()
        .iter()
        .zip(&delta)
        .map(|(t, d)| t - d)
        .collect();
    ParamPoint::new(next)
}

/// Global minimizer of the scalar cubic model m(s) = g·s + h·s²/2 + L·|s|³.
///
/// For g > 0 the descent branch s < 0 always carries a unique critical
/// point −u with 3Lu² + hu − g = 0. Of the two algebraically equal root
/// forms, 2g/(h + √(h² + 12Lg)) is cancellation-free for h ≥ 0 and
/// (−h + √(h² + 12Lg))/(6L) for h < 0, so the sign of h picks the form.
/// When h < 0 the opposite branch can hold a second local minimum at
/// (−h + √(h² − 12Lg))/(6L); the global one is whichever has the smaller
/// model value. g < 0 reduces to −argmin(−g, h, L), and g = 0 maps to 0:
/// the model is then minimized at 0 whenever h ≥ 0, and for h < 0 the
/// symmetric pair ±(−h)/(3L) ties, where returning 0 keeps the map
/// deterministic and fixed-point-consistent.
pub(crate) fn cnm_model_argmin(g: f64, h: f64, l: f64) -> f64 {
    debug_assert!(l > 0.0);
    if g == 0.0 {
        return 0.0;
    }
    if g < 0.0 {
        return -cnm_model_argmin(-g, h, l);
    }
    let root = (h * h + 12.0 * l * g).sqrt();
    let descent = if h >= 0.0 {
        -2.0 * g / (h + root)
    } else {
        -(-h + root) / (6.0 * l)
    };
    if h >= 0.0 {
        return descent;
    }
    let disc = h * h - 12.0 * l * g;
    if disc < 0.0 {
        return descent;
    }
    let other = (-h + disc.sqrt()) / (6.0 * l);
    let model = |s: f64| g * s + 0.5 * h * s * s + l * s.abs().powi(3);
    if model(other) < model(descent) {
        other
    } else {
        descent
    }
}

/// One cubically regularized Newton step for scalar objectives:
/// θ + argmin_s { ∇f(θ)·s + f″(θ)·s²/2 + L·|s|³ }.
pub fn cnm_step(obj: &Objective, theta: &ParamPoint, l: f64) -> Result<ParamPoint> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::validation(format!(
            "cubic regularization weight must be positive and finite, got {l}"
        )));
    }
    if obj.dim() != 1 {
        return Err(Error::validation(
            "the cubic-regularized step has a closed form for scalar parameters only",
        ));
    }
    let e = obj.eval(theta)?;
    let s = cnm_model_argmin(e.grad[0], e.hess[0], l);
    if !s.is_finite() {
        return Err(Error::non_finite(format!("cubic model step at {theta}")));
    }
    ParamPoint::new(vec![theta.as_scalar() + s])
}

/// The EM fixed-point update for the Gaussian mixture: the sample map
/// (1/n)Σ xᵢ·tanh(θᵀxᵢ) or its population expectation (scalar only).
pub fn em_step_mixture(
    level: Level,
    data: Option<&Dataset>,
    theta: &ParamPoint,
) -> Result<ParamPoint> {
    match level {
        Level::Population => {
            if data.is_some() {
                return Err(Error::validation(
                    "the population EM update takes no dataset",
                ));
            }
            if theta.dim() != 1 {
                return Err(Error::validation(
                    "the population EM update is defined for d = 1 only",
                ));
            }
            ParamPoint::new(vec![mixture::population_em_map(theta.as_scalar())?])
        }
        Level::Sample => {
            let Some(Dataset::Mixture(m)) = data else {
                return Err(Error::validation(
                    "the sample EM update requires a mixture dataset",
                ));
            };
            if theta.dim() != m.dim() {
                return Err(Error::validation(format!(
                    "point has dimension {}, data has {}",
                    theta.dim(),
                    m.dim()
                )));
            }
            ParamPoint::new(mixture::sample_em_map(m, theta.coords()))
        }
    }
}

#[derive(Debug)]
enum HandleKind {
    Gd { obj: Objective, eta: f64 },
    Newton { obj: Objective },
    Cnm { obj: Objective, l: f64 },
    EmSample { data: Arc<MixtureData> },
    EmPopulation,
}

/// A ready-to-iterate operator: one (model, algorithm, level) triple with
/// all parameters resolved. Build it with [`make_operator`].
#[derive(Debug)]
pub struct OperatorHandle {
    dim: usize,
    eta: Option<f64>,
    cubic_l: Option<f64>,
    kind: HandleKind,
}

impl OperatorHandle {
    /// The gradient step size in effect, if the scheme uses one.
    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    /// The cubic regularization weight in effect, if applicable.
    pub fn cubic_l(&self) -> Option<f64> {
        self.cubic_l
    }
}

impl Operator for OperatorHandle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, theta: &ParamPoint) -> Result<ParamPoint> {
        match &self.kind {
            HandleKind::Gd { obj, eta } => gd_step(obj, theta, *eta),
            HandleKind::Newton { obj } => newton_step(obj, theta),
            HandleKind::Cnm { obj, l } => cnm_step(obj, theta, *l),
            HandleKind::EmSample { data } => {
                ParamPoint::new(mixture::sample_em_map(data, theta.coords()))
            }
            HandleKind::EmPopulation => {
                ParamPoint::new(vec![mixture::population_em_map(theta.as_scalar())?])
            }
        }
    }
}

fn supported_for(model: &ModelSpec) -> &'static str {
    match model {
        ModelSpec::NonResponse => "gd, nm",
        ModelSpec::Mixture { .. } => "em, nm",
        ModelSpec::Regression { .. } | ModelSpec::Polynomial(_) => "gd, nm, cnm",
        ModelSpec::Counterexample(_) => "nm",
    }
}

/// Whether the (model, algorithm) pair is in the supported matrix.
pub fn is_supported(model: &ModelSpec, algorithm: Algorithm) -> bool {
    match model {
        ModelSpec::NonResponse => matches!(algorithm, Algorithm::Gd | Algorithm::Newton),
        ModelSpec::Mixture { .. } => matches!(algorithm, Algorithm::Em | Algorithm::Newton),
        ModelSpec::Regression { .. } | ModelSpec::Polynomial(_) => {
            matches!(algorithm, Algorithm::Gd | Algorithm::Newton | Algorithm::Cnm)
        }
        ModelSpec::Counterexample(_) => matches!(algorithm, Algorithm::Newton),
    }
}

/// Largest admissible gradient step size for the models that support
/// gradient descent. The caps are the smoothness bounds under which the
/// population map provably contracts toward its fixed point on the unit
/// ball (non-response: on |θ| ≤ 1/2 for η ≤ 8/3).
fn eta_bound(model: &ModelSpec) -> f64 {
    match model {
        ModelSpec::NonResponse => 8.0 / 3.0,
        ModelSpec::Regression { p, .. } => {
            1.0 / (2.0 * *p as f64 * regression::double_factorial_odd(2 * *p))
        }
        ModelSpec::Polynomial(_) => 0.5,
        _ => unreachable!("gradient descent is rejected for this model earlier"),
    }
}

fn default_eta(model: &ModelSpec) -> f64 {
    match model {
        // The sweep protocols run the non-response model at η = 2, inside
        // the admissible range and fast enough to localize in few epochs.
        ModelSpec::NonResponse => 2.0,
        other => eta_bound(other),
    }
}

fn default_cubic_l(model: &ModelSpec) -> f64 {
    match model {
        // Third-derivative bound of the population objective on the unit
        // ball: (4p−1)!!·(4p−1)·p/3.
        ModelSpec::Regression { p, .. } => {
            let pf = *p as f64;
            regression::double_factorial_odd(2 * *p) * (4.0 * pf - 1.0) * pf / 3.0
        }
        // Scaled Lipschitz constant of r ↦ r^{p−2} near the origin.
        ModelSpec::Polynomial(spec) => (spec.p - 1.0) * (spec.p - 2.0) / 6.0,
        _ => unreachable!("the cubic scheme is rejected for this model earlier"),
    }
}

/// Builds the iteration operator for a (model, algorithm, level) triple.
///
/// Fails with [`Error::Unsupported`] outside the supported pairs:
/// non-response {gd, nm}, mixture {em, nm}, regression {gd, nm, cnm},
/// power-law pair {gd, nm, cnm}, instability example {nm}.
///
/// Defaults when `config` leaves fields unset: η = 2 (non-response),
/// η = 1/(2p·(4p−1)!!) (regression), η = 1/2 (power-law pair);
/// L = (4p−1)!!·(4p−1)·p/3 (regression), L = (p−1)(p−2)/6 (power-law pair).
/// A supplied η is validated against those model caps; stray parameters
/// (η for Newton/EM, L for anything but cnm) are rejected.
pub fn make_operator(
    model: &ModelSpec,
    algorithm: Algorithm,
    level: Level,
    data: Option<&Dataset>,
    config: &AlgorithmConfig,
) -> Result<OperatorHandle> {
    if !is_supported(model, algorithm) {
        return Err(Error::Unsupported {
            model: model.name().into(),
            algorithm: algorithm.name().into(),
            supported: supported_for(model),
        });
    }
    if config.eta.is_some() && algorithm != Algorithm::Gd {
        return Err(Error::validation(format!(
            "a step size was supplied, but {algorithm} does not take one"
        )));
    }
    if config.cubic_l.is_some() && algorithm != Algorithm::Cnm {
        return Err(Error::validation(format!(
            "a cubic regularization weight was supplied, but {algorithm} does not take one"
        )));
    }

    let dim = model.dim();
    match algorithm {
        Algorithm::Gd => {
            let bound = eta_bound(model);
            let eta = config.eta.unwrap_or_else(|| default_eta(model));
            if !(eta.is_finite() && eta > 0.0 && eta <= bound) {
                return Err(Error::validation(format!(
                    "step size {eta} outside the admissible range (0, {bound}] for model '{}'",
                    model.name()
                )));
            }
            let obj = Objective::build(model, level, data)?;
            Ok(OperatorHandle {
                dim,
                eta: Some(eta),
                cubic_l: None,
                kind: HandleKind::Gd { obj, eta },
            })
        }
        Algorithm::Newton => {
            let obj = Objective::build(model, level, data)?;
            Ok(OperatorHandle { dim, eta: None, cubic_l: None, kind: HandleKind::Newton { obj } })
        }
        Algorithm::Cnm => {
            if dim != 1 {
                return Err(Error::validation(
                    "the cubic-regularized scheme is implemented for scalar parameters only",
                ));
            }
            let l = config.cubic_l.unwrap_or_else(|| default_cubic_l(model));
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::validation(format!(
                    "cubic regularization weight must be positive and finite, got {l}"
                )));
            }
            let obj = Objective::build(model, level, data)?;
            Ok(OperatorHandle {
                dim,
                eta: None,
                cubic_l: Some(l),
                kind: HandleKind::Cnm { obj, l },
            })
        }
        Algorithm::Em => {
            // Reuse the objective constructor for model/data/dimension
            // agreement checks, then keep only what EM needs.
            match level {
                Level::Population => {
                    Objective::build(model, level, None)?;
                    Ok(OperatorHandle {
                        dim,
                        eta: None,
                        cubic_l: None,
                        kind: HandleKind::EmPopulation,
                    })
                }
                Level::Sample => {
                    Objective::build(model, level, data)?;
                    let Some(Dataset::Mixture(m)) = data else {
                        unreachable!("objective construction validated the dataset")
                    };
                    Ok(OperatorHandle {
                        dim,
                        eta: None,
                        cubic_l: None,
                        kind: HandleKind::EmSample { data: Arc::new(m.clone()) },
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        gen_mixture, CounterexampleSpec, PolynomialSpec,
    };

    fn scalar(x: f64) -> ParamPoint {
        ParamPoint::scalar(x).unwrap()
    }

    fn poly_model(p: f64, q: f64, eps: f64, d: usize) -> ModelSpec {
        ModelSpec::Polynomial(PolynomialSpec::new(p, q, eps, d).unwrap())
    }

    #[test]
    fn gd_population_power_law_map() {
        // θ ↦ θ(1 − η‖θ‖^{p−2}): p = 4, η = 1/2, θ = 1 gives 1/2.
        let model = poly_model(4.0, 2.0, 0.1, 1);
        let obj = Objective::build(&model, Level::Population, None).unwrap();
        let next = gd_step(&obj, &scalar(1.0), 0.5).unwrap();
        assert!((next.as_scalar() - 0.5).abs() < 1e-15);
        let next = gd_step(&obj, &scalar(2.0), 0.5).unwrap();
        assert!((next.as_scalar() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn newton_contracts_regression_population_by_two_thirds() {
        let model = ModelSpec::Regression { d: 1, p: 1 };
        let obj = Objective::build(&model, Level::Population, None).unwrap();
        let next = newton_step(&obj, &scalar(0.9)).unwrap();
        assert!((next.as_scalar() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn newton_first_step_on_the_instability_example() {
        // Hand-computed: n = 10⁴, θ₀ = 0.03 jumps across the origin.
        let model = ModelSpec::Counterexample(CounterexampleSpec::new(10_000).unwrap());
        let obj = Objective::build(&model, Level::Sample, None).unwrap();
        let next = newton_step(&obj, &scalar(0.03)).unwrap();
        assert!((next.as_scalar() + 0.028949).abs() < 1e-6, "got {next}");
    }

    #[test]
    fn cnm_regression_population_hand_value() {
        // θ = 1, p = 1, L = 3: the step lands at 2 − √(5/3).
        let model = ModelSpec::Regression { d: 1, p: 1 };
        let obj = Objective::build(&model, Level::Population, None).unwrap();
        let next = cnm_step(&obj, &scalar(1.0), 3.0).unwrap();
        assert!((next.as_scalar() - 0.709_005_551_264_194_4).abs() < 1e-12);
        // Odd extension: the map commutes with θ ↦ −θ.
        let neg = cnm_step(&obj, &scalar(-1.0), 3.0).unwrap();
        assert!((neg.as_scalar() + next.as_scalar()).abs() < 1e-15);
    }

    #[test]
    fn cnm_model_argmin_beats_a_dense_grid() {
        // Battery over sign/branch combinations, including h < 0 with both
        // one and two local minima.
        let cases = [
            (6.0, 18.0, 3.0),
            (0.375, -0.25, 1.0),
            (0.02, -1.0, 1.0),
            (-0.02, -1.0, 1.0),
            (1e-9, -2.0, 0.5),
            (0.5, 0.0, 2.0),
            (-3.0, 4.0, 0.1),
        ];
        for (g, h, l) in cases {
            let s = cnm_model_argmin(g, h, l);
            let m = |s: f64| g * s + 0.5 * h * s * s + l * s.abs().powi(3);
            // The argmin must satisfy first-order stationarity...
            let grad = g + h * s + 3.0 * l * s * s * s.signum();
            assert!(grad.abs() <= 1e-9 * (1.0 + g.abs() + h.abs()), "gradient {grad} for {g},{h},{l}");
            // ...and beat every grid point over a wide bracket.
            let best_grid = (-40_000..=40_000)
                .map(|i| i as f64 * 1e-4)
                .map(m)
                .fold(f64::INFINITY, f64::min);
            assert!(m(s) <= best_grid + 1e-9, "argmin {s} loses to grid for {g},{h},{l}");
        }
    }

    #[test]
    fn cnm_zero_gradient_stays_put() {
        assert_eq!(cnm_model_argmin(0.0, 5.0, 1.0), 0.0);
        assert_eq!(cnm_model_argmin(0.0, -5.0, 1.0), 0.0);
    }

    #[test]
    fn em_step_hand_value() {
        let data = Dataset::Mixture(crate::models::MixtureData::new(1, vec![2.0, -2.0]).unwrap());
        let next = em_step_mixture(Level::Sample, Some(&data), &scalar(1.0)).unwrap();
        assert!((next.as_scalar() - 2.0 * 2.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn support_matrix_rejections() {
        let cfg = AlgorithmConfig::default();
        let cases: [(ModelSpec, Algorithm); 4] = [
            (ModelSpec::NonResponse, Algorithm::Em),
            (ModelSpec::Mixture { d: 1 }, Algorithm::Gd),
            (ModelSpec::Regression { d: 1, p: 1 }, Algorithm::Em),
            (
                ModelSpec::Counterexample(CounterexampleSpec::new(64).unwrap()),
                Algorithm::Gd,
            ),
        ];
        for (model, alg) in cases {
            let err = make_operator(&model, alg, Level::Population, None, &cfg).unwrap_err();
            assert!(matches!(err, Error::Unsupported { .. }), "{model:?} + {alg}");
        }
    }

    #[test]
    fn step_size_caps_are_enforced() {
        let cfg = AlgorithmConfig { eta: Some(0.2), cubic_l: None };
        // Regression p = 1 caps η at 1/6.
        let err = make_operator(
            &ModelSpec::Regression { d: 1, p: 1 },
            Algorithm::Gd,
            Level::Population,
            None,
            &cfg,
        )
        .unwrap_err();
        assert!(err.is_validation());
        let ok = make_operator(
            &ModelSpec::Regression { d: 1, p: 1 },
            Algorithm::Gd,
            Level::Population,
            None,
            &AlgorithmConfig { eta: Some(1.0 / 6.0), cubic_l: None },
        );
        assert_eq!(ok.unwrap().eta(), Some(1.0 / 6.0));
    }

    #[test]
    fn stray_parameters_are_rejected() {
        let model = ModelSpec::Regression { d: 1, p: 1 };
        let err = make_operator(
            &model,
            Algorithm::Newton,
            Level::Population,
            None,
            &AlgorithmConfig { eta: Some(0.1), cubic_l: None },
        );
        assert!(err.unwrap_err().is_validation());
        let err = make_operator(
            &model,
            Algorithm::Gd,
            Level::Population,
            None,
            &AlgorithmConfig { eta: Some(0.1), cubic_l: Some(3.0) },
        );
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn defaults_resolve_per_model() {
        let h = make_operator(
            &ModelSpec::Regression { d: 1, p: 1 },
            Algorithm::Gd,
            Level::Population,
            None,
            &AlgorithmConfig::default(),
        )
        .unwrap();
        assert_eq!(h.eta(), Some(1.0 / 6.0));
        let h = make_operator(
            &ModelSpec::Regression { d: 1, p: 1 },
            Algorithm::Cnm,
            Level::Population,
            None,
            &AlgorithmConfig::default(),
        )
        .unwrap();
        assert_eq!(h.cubic_l(), Some(3.0));
        let h = make_operator(
            &poly_model(4.0, 2.0, 0.1, 1),
            Algorithm::Cnm,
            Level::Population,
            None,
            &AlgorithmConfig::default(),
        )
        .unwrap();
        assert_eq!(h.cubic_l(), Some(1.0));
    }

    #[test]
    fn cnm_is_scalar_only() {
        let err = make_operator(
            &poly_model(4.0, 2.0, 0.1, 2),
            Algorithm::Cnm,
            Level::Population,
            None,
            &AlgorithmConfig::default(),
        );
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn operator_handle_iterates_mixture_em() {
        use crate::operator::iterate;
        let data = Dataset::Mixture(gen_mixture(256, 1, 3).unwrap());
        let op = make_operator(
            &ModelSpec::Mixture { d: 1 },
            Algorithm::Em,
            Level::Sample,
            Some(&data),
            &AlgorithmConfig::default(),
        )
        .unwrap();
        let trace = iterate(&op, &scalar(0.5), 50, &ParamPoint::zero(1)).unwrap();
        assert_eq!(trace.len(), 51);
        // EM contracts toward the sample optimizer, so errors stay bounded.
        assert!(trace.final_entry().error < 0.6);
    }

    #[test]
    fn nonresponse_gradient_map_contracts() {
        // Population bound: |θ′| ≤ |θ|(1 − ηθ²/4) for η ≤ 8/3, |θ| ≤ 1/2.
        let obj = Objective::build(&ModelSpec::NonResponse, Level::Population, None).unwrap();
        for eta in [0.5, 2.0, 8.0 / 3.0] {
            for t in [0.1, 0.3, 0.5] {
                let next = gd_step(&obj, &scalar(t), eta).unwrap().as_scalar();
                assert!(next.abs() <= t * (1.0 - eta * t * t / 4.0) + 1e-15, "eta {eta}, t {t}");
            }
        }
    }
}
