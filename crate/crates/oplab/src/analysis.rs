//! Measurement instruments: power-law fits, convergence-mode
//! classification, and sample-vs-population perturbation profiles.
//!
//! Two empirical questions recur throughout the laboratory:
//!
//! * Given one iteration trace, does the error decay geometrically (a
//!   contraction factor κ̂ per step) or algebraically (an exponent β̂ in
//!   t^{−β̂})? [`classify_convergence`] answers by fitting both the
//!   semilog and the log-log transform and keeping the better one.
//! * How far apart are a sample operator and its population limit on the
//!   sphere of radius r, and how does that gap scale in r?
//!   [`perturbation_profile`] measures the sup-discrepancy over probe
//!   points, [`fit_power_law`] extracts the scaling exponent γ̂, and
//!   [`detect_inner_radius`] locates where a negative-exponent trend
//!   breaks down as r shrinks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algorithms::{make_operator, Algorithm, AlgorithmConfig};
use crate::error::{Error, Result};
use crate::models::{Dataset, Level, ModelSpec};
use crate::operator::{IterationTrace, Operator};
use crate::point::ParamPoint;
use crate::seeding::mix;

/// The abscissa transform a straight line was fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitDomain {
    /// log y against log x: a straight line means a power law y ∝ x^slope.
    LogLog,
    /// log y against x: a straight line means geometric decay y ∝ e^{slope·x}.
    Semilog,
}

/// A least-squares line on a transformed scale, with its fit quality.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to [0, 1].
    pub r2: f64,
    /// Euclidean norm of the residual vector on the fitted scale.
    pub residual_norm: f64,
    pub domain: FitDomain,
}

impl RateFit {
    /// The fitted ordinate at abscissa `x` (both on the transformed scale).
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

fn fit_line(xs: &[f64], ys: &[f64], domain: FitDomain) -> Result<RateFit> {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::validation(
            "all abscissae coincide; the slope is undefined",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res.sqrt() <= 1e-12 {
        1.0
    } else {
        0.0
    };
    Ok(RateFit { slope, intercept, r2, residual_norm: ss_res.sqrt(), domain })
}

/// Fits y ∝ x^slope by least squares on (log x, log y).
///
/// Needs at least three pairs, all strictly positive and finite. The fit
/// is exact (zero residual) on noiseless power-law data.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::validation(format!(
            "mismatched lengths: {} abscissae vs {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::validation("a power-law fit needs at least 3 points"));
    }
    if xs
        .iter()
        .chain(ys)
        .any(|v| !v.is_finite() || *v <= 0.0)
    {
        return Err(Error::validation(
            "power-law fits require strictly positive finite inputs",
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly, FitDomain::LogLog)
}

/// The rate family a trace was classified into, with the fitted constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateMode {
    /// Geometric decay: error ≈ C·κ̂^t with κ̂ = exp(semilog slope).
    Fast { kappa_hat: f64 },
    /// Algebraic decay: error ≈ C·t^{−β̂} with β̂ = −(log-log slope).
    Slow { beta_hat: f64 },
}

/// A classified trace: the winning mode, its fit, and the losing fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceClass {
    pub mode: RateMode,
    /// The fit in the winning domain.
    pub fit: RateFit,
    /// The fit in the rejected domain, kept for diagnostics.
    pub alternative: RateFit,
}

impl ConvergenceClass {
    pub fn is_fast(&self) -> bool {
        matches!(self.mode, RateMode::Fast { .. })
    }

    /// κ̂ for a fast classification, β̂ for a slow one.
    pub fn rate(&self) -> f64 {
        match self.mode {
            RateMode::Fast { kappa_hat } => kappa_hat,
            RateMode::Slow { beta_hat } => beta_hat,
        }
    }
}

/// Decides whether a trace decays geometrically or algebraically.
///
/// The trace is truncated at the first exact-zero error (nothing decays
/// past an exact hit), the first 5 iterations are discarded as transient,
/// and any trailing plateau indistinguishable from the final error (within
/// 2 machine epsilons, relative) is dropped. Both the semilog and log-log
/// lines are fitted to what remains; geometric decay is declared only if
/// the semilog R² beats the log-log R² by at least 0.02, which keeps short
/// noisy traces from flapping between modes.
pub fn classify_convergence(trace: &IterationTrace) -> Result<ConvergenceClass> {
    let entries = trace.entries();
    let cut = entries
        .iter()
        .position(|e| e.error == 0.0)
        .unwrap_or(entries.len());
    let live = &entries[..cut];
    if live.len() < 20 {
        return Err(Error::validation(format!(
            "classification needs at least 20 iterations with positive error, got {}",
            live.len()
        )));
    }
    let final_err = live.last().expect("live is non-empty").error;
    let tol = 2.0 * f64::EPSILON * final_err.max(1e-300);
    let mut end = live.len();
    while end > 0 && (live[end - 1].error - final_err).abs() <= tol {
        end -= 1;
    }
    let windowed: Vec<(f64, f64)> = live[..end]
        .iter()
        .filter(|e| e.t >= 5)
        .map(|e| (e.t as f64, e.error.ln()))
        .collect();
    if windowed.len() < 3 {
        return Err(Error::validation(
            "too few points remain outside the transient and the floor plateau",
        ));
    }
    let ts: Vec<f64> = windowed.iter().map(|(t, _)| *t).collect();
    let ls: Vec<f64> = windowed.iter().map(|(_, l)| *l).collect();
    let lts: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let semilog = fit_line(&ts, &ls, FitDomain::Semilog)?;
    let loglog = fit_line(&lts, &ls, FitDomain::LogLog)?;
    if semilog.r2 >= loglog.r2 + 0.02 {
        Ok(ConvergenceClass {
            mode: RateMode::Fast { kappa_hat: semilog.slope.exp() },
            fit: semilog,
            alternative: loglog,
        })
    } else {
        Ok(ConvergenceClass {
            mode: RateMode::Slow { beta_hat: -loglog.slope },
            fit: loglog,
            alternative: semilog,
        })
    }
}

/// Sup-discrepancy between a sample operator and its population limit,
/// measured on spheres of increasing radius.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityProfile {
    radii: Vec<f64>,
    sups: Vec<f64>,
    probes_ok: Vec<usize>,
    valid: Vec<bool>,
    probe_count: usize,
    gamma_fit: Option<RateFit>,
    fit_range: Option<(f64, f64)>,
    inner_radius: Option<f64>,
}

impl StabilityProfile {
    /// Assembles a profile from measured rows and recomputes the trend fit
    /// and, for a decaying trend, the inner break radius. A row is valid
    /// when at least half its probes evaluated successfully.
    pub fn from_measurements(
        radii: Vec<f64>,
        sups: Vec<f64>,
        probes_ok: Vec<usize>,
        probe_count: usize,
    ) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::validation("a profile needs at least one radius"));
        }
        if radii.len() != sups.len() || radii.len() != probes_ok.len() {
            return Err(Error::validation(
                "radii, sups and probes_ok must have equal lengths",
            ));
        }
        if probe_count == 0 {
            return Err(Error::validation("probe_count must be at least 1"));
        }
        for w in radii.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::validation("radii must be strictly increasing"));
            }
        }
        if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::validation("radii must be positive and finite"));
        }
        if sups.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::validation(
                "sup-discrepancies must be nonnegative and finite",
            ));
        }
        if probes_ok.iter().any(|ok| *ok > probe_count) {
            return Err(Error::validation(
                "a row cannot have more successful probes than probe_count",
            ));
        }
        let valid: Vec<bool> = probes_ok.iter().map(|ok| ok * 2 >= probe_count).collect();
        let used: Vec<(f64, f64)> = radii
            .iter()
            .zip(&sups)
            .zip(&valid)
            .filter(|((_, s), v)| **v && **s > 0.0)
            .map(|((r, s), _)| (*r, *s))
            .collect();
        let (gamma_fit, fit_range) = if used.len() >= 3 {
            let xs: Vec<f64> = used.iter().map(|(r, _)| *r).collect();
            let ys: Vec<f64> = used.iter().map(|(_, s)| *s).collect();
            let fit = fit_power_law(&xs, &ys)?;
            let range = (xs[0], *xs.last().expect("non-empty"));
            (Some(fit), Some(range))
        } else {
            (None, None)
        };
        let mut profile = StabilityProfile {
            radii,
            sups,
            probes_ok,
            valid,
            probe_count,
            gamma_fit,
            fit_range,
            inner_radius: None,
        };
        if profile.gamma_fit.as_ref().is_some_and(|f| f.slope < 0.0) {
            profile.inner_radius = Some(detect_inner_radius(&profile)?);
        }
        Ok(profile)
    }

    /// Probe-sphere radii, strictly increasing.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Max discrepancy over successful probes at each radius (0 when no
    /// probe succeeded; check [`Self::valid`]).
    pub fn sups(&self) -> &[f64] {
        &self.sups
    }

    /// Successful probes per radius.
    pub fn probes_ok(&self) -> &[usize] {
        &self.probes_ok
    }

    /// Whether each radius kept at least half of its probes.
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// Probes attempted at every radius.
    pub fn probe_count(&self) -> usize {
        self.probe_count
    }

    /// Power-law trend of sup against radius, when ≥ 3 usable rows exist.
    pub fn gamma_fit(&self) -> Option<&RateFit> {
        self.gamma_fit.as_ref()
    }

    /// The fitted scaling exponent γ̂, if a trend was fitted.
    pub fn gamma_hat(&self) -> Option<f64> {
        self.gamma_fit.as_ref().map(|f| f.slope)
    }

    /// Radius interval (first, last) actually used by the trend fit.
    pub fn fit_range(&self) -> Option<(f64, f64)> {
        self.fit_range
    }

    /// Break radius of a decaying trend (γ̂ < 0 profiles only).
    pub fn inner_radius(&self) -> Option<f64> {
        self.inner_radius
    }
}

/// Measures ‖sample step − population step‖ over spheres around the fixed
/// point and fits the scaling exponent γ̂.
///
/// Probes are the pair {+r, −r} in one dimension, and `probes_per_radius`
/// points drawn uniformly on the sphere (normalized Gaussians, at least 8)
/// in higher dimension. Each radius gets its own generator stream derived
/// from `seed` and the radius index, drawn sequentially, so results are
/// reproducible and raising `probes_per_radius` only extends each stream:
/// the recorded sup can never decrease. A probe whose evaluation fails is
/// skipped; a radius keeping fewer than half its probes is marked invalid
/// and excluded from the fit.
///
/// `data` backs the sample operator of statistical families and must be
/// `None` for the deterministic ones, whose sample level is built into the
/// model itself.
pub fn perturbation_profile(
    model: &ModelSpec,
    algorithm: Algorithm,
    data: Option<&Dataset>,
    config: &AlgorithmConfig,
    radii: &[f64],
    probes_per_radius: usize,
    seed: u64,
) -> Result<StabilityProfile> {
    if radii.is_empty() {
        return Err(Error::validation("at least one probe radius is required"));
    }
    let rho = model.rho();
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0 || *r > rho) {
        return Err(Error::validation(format!(
            "probe radii must lie in (0, {rho}]"
        )));
    }
    for w in radii.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::validation("probe radii must be strictly increasing"));
        }
    }
    let d = model.dim();
    if d > 1 && probes_per_radius < 8 {
        return Err(Error::validation(
            "at least 8 probes per radius are required when d > 1",
        ));
    }
    let sample = make_operator(model, algorithm, Level::Sample, data, config)?;
    let population = make_operator(model, algorithm, Level::Population, None, config)?;
    let probes = if d == 1 { 2 } else { probes_per_radius };

    let mut sups = Vec::with_capacity(radii.len());
    let mut oks = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, k as u64]));
        let mut sup = 0.0f64;
        let mut ok = 0usize;
        for j in 0..probes {
            let theta = if d == 1 {
                ParamPoint::scalar(if j == 0 { r } else { -r })?
            } else {
                sphere_point(&mut rng, d, r)?
            };
            let (Ok(a), Ok(b)) = (sample.apply(&theta), population.apply(&theta)) else {
                continue;
            };
            let disc = a.dist(&b);
            if !disc.is_finite() {
                continue;
            }
            sup = sup.max(disc);
            ok += 1;
        }
        sups.push(sup);
        oks.push(ok);
    }
    StabilityProfile::from_measurements(radii.to_vec(), sups, oks, probes)
}

fn sphere_point(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Result<ParamPoint> {
    loop {
        let coords: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return ParamPoint::new(coords.into_iter().map(|c| c * r / norm).collect());
        }
    }
}

/// Locates where a decaying perturbation trend breaks down as r shrinks.
///
/// A clean reference trend is refitted on the upper geometric half of the
/// usable radii (where an unstable operator still follows its power law);
/// the inner radius is the largest radius whose measured sup exceeds twice
/// that trend, falling back to the smallest profiled radius when no row
/// breaks out. Stable profiles (fitted γ̂ ≥ 0, or no fit at all) have no
/// inner radius and are rejected.
pub fn detect_inner_radius(profile: &StabilityProfile) -> Result<f64> {
    let Some(fit) = profile.gamma_fit() else {
        return Err(Error::validation(
            "inner-radius detection needs a fitted trend (3 or more usable rows)",
        ));
    };
    if fit.slope >= 0.0 {
        return Err(Error::validation(format!(
            "inner-radius detection applies to decaying trends only; fitted gamma is {:.3}",
            fit.slope
        )));
    }
    let used: Vec<(f64, f64)> = profile
        .radii()
        .iter()
        .zip(profile.sups())
        .zip(profile.valid())
        .filter(|((_, s), v)| **v && **s > 0.0)
        .map(|((r, s), _)| (*r, *s))
        .collect();
    debug_assert!(used.len() >= 3, "gamma_fit exists, so >= 3 rows were usable");
    let first = used[0].0;
    let last = used[used.len() - 1].0;
    let mid = (first * last).sqrt();
    let upper: Vec<(f64, f64)> = used.iter().copied().filter(|(r, _)| *r >= mid).collect();
    let trend = if upper.len() >= 3 {
        let xs: Vec<f64> = upper.iter().map(|(r, _)| *r).collect();
        let ys: Vec<f64> = upper.iter().map(|(_, s)| *s).collect();
        fit_power_law(&xs, &ys)?
    } else {
        fit.clone()
    };
    let mut found = None;
    for (r, s) in &used {
        if *s > 2.0 * trend.predict(r.ln()).exp() {
            found = Some(*r);
        }
    }
    Ok(found.unwrap_or(profile.radii()[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PolynomialSpec;
    use crate::operator::{iterate, TerminationReason};

    fn scalar_trace(values: &[f64]) -> IterationTrace {
        let points: Vec<ParamPoint> = values
            .iter()
            .map(|v| ParamPoint::scalar(*v).unwrap())
            .collect();
        IterationTrace::from_points(ParamPoint::zero(1), points, TerminationReason::MaxIters)
            .unwrap()
    }

    #[test]
    fn power_law_exact() {
        let fit = fit_power_law(&[1.0, 10.0, 100.0], &[2.0, 20.0, 200.0]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.residual_norm < 1e-12);
        assert_eq!(fit.domain, FitDomain::LogLog);
    }

    #[test]
    fn power_law_constant_is_flat() {
        let fit = fit_power_law(&[1.0, 2.0, 4.0, 8.0], &[3.0, 3.0, 3.0, 3.0]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12, "flat data is a perfect flat fit");
    }

    #[test]
    fn power_law_with_noise_recovers_slope() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x.powf(-0.25) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        assert!(
            fit.slope > -0.27 && fit.slope < -0.23,
            "slope {} outside [-0.27, -0.23]",
            fit.slope
        );
    }

    #[test]
    fn power_law_rejects_bad_inputs() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, -3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 0.0, 3.0]).is_err());
        assert!(fit_power_law(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn classify_exact_geometric() {
        let values: Vec<f64> = (0..80).map(|t| 0.9 * 0.8f64.powi(t)).collect();
        let class = classify_convergence(&scalar_trace(&values)).unwrap();
        assert!(class.is_fast());
        let RateMode::Fast { kappa_hat } = class.mode else {
            panic!("expected fast mode")
        };
        assert!(
            kappa_hat > 0.799 && kappa_hat < 0.801,
            "kappa_hat = {kappa_hat}"
        );
        assert_eq!(class.fit.domain, FitDomain::Semilog);
        assert_eq!(class.alternative.domain, FitDomain::LogLog);
    }

    #[test]
    fn classify_exact_algebraic() {
        let values: Vec<f64> = (0..200).map(|t| ((t + 1) as f64).powf(-0.5)).collect();
        let class = classify_convergence(&scalar_trace(&values)).unwrap();
        assert!(!class.is_fast());
        let RateMode::Slow { beta_hat } = class.mode else {
            panic!("expected slow mode")
        };
        assert!(
            beta_hat > 0.45 && beta_hat < 0.55,
            "beta_hat = {beta_hat}"
        );
    }

    #[test]
    fn classify_truncates_at_exact_zero() {
        let mut values: Vec<f64> = (0..30).map(|t| 0.8f64.powi(t)).collect();
        values.extend(std::iter::repeat(0.0).take(20));
        let class = classify_convergence(&scalar_trace(&values)).unwrap();
        let RateMode::Fast { kappa_hat } = class.mode else {
            panic!("expected fast mode")
        };
        assert!((kappa_hat - 0.8).abs() < 1e-6);
    }

    #[test]
    fn classify_rejects_short_and_flat_traces() {
        let short: Vec<f64> = (0..10).map(|t| 0.8f64.powi(t)).collect();
        assert!(classify_convergence(&scalar_trace(&short)).is_err());
        let flat = vec![0.5; 30];
        assert!(classify_convergence(&scalar_trace(&flat)).is_err());
    }

    #[test]
    fn newton_on_flat_regression_is_geometric_two_thirds() {
        let model = ModelSpec::Regression { d: 1, p: 1 };
        let op = make_operator(
            &model,
            Algorithm::Newton,
            Level::Population,
            None,
            &AlgorithmConfig::default(),
        )
        .unwrap();
        let theta0 = ParamPoint::scalar(0.9).unwrap();
        let trace = iterate(&op, &theta0, 60, &ParamPoint::zero(1)).unwrap();
        let class = classify_convergence(&trace).unwrap();
        assert!(class.is_fast());
        assert!((class.rate() - 2.0 / 3.0).abs() <= 0.01, "rate {}", class.rate());
        assert!(class.fit.r2 >= 0.99);
    }

    fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let ratio = (hi / lo).powf(1.0 / (count as f64 - 1.0));
        (0..count).map(|k| lo * ratio.powi(k as i32)).collect()
    }

    #[test]
    fn zero_perturbation_profile_is_identically_zero() {
        let spec = PolynomialSpec::new(4.0, 2.0, 0.0, 1).unwrap();
        let model = ModelSpec::Polynomial(spec);
        let profile = perturbation_profile(
            &model,
            Algorithm::Gd,
            None,
            &AlgorithmConfig::default(),
            &geometric_radii(0.05, 0.5, 8),
            8,
            1,
        )
        .unwrap();
        assert!(profile.sups().iter().all(|s| *s == 0.0));
        assert!(profile.valid().iter().all(|v| *v));
        assert!(profile.gamma_fit().is_none());
        assert!(profile.inner_radius().is_none());
        assert_eq!(profile.probe_count(), 2);
    }

    #[test]
    fn polynomial_gd_profile_matches_analytic_law() {
        // Sample and population gradient steps differ by exactly
        // eta * eps_n * r^{q-1} in this family; no randomness involved.
        let eps_n = 1e-3;
        let spec = PolynomialSpec::new(4.0, 2.0, eps_n, 1).unwrap();
        let model = ModelSpec::Polynomial(spec);
        let config = AlgorithmConfig::default();
        let radii = geometric_radii(0.05, 0.5, 10);
        let profile =
            perturbation_profile(&model, Algorithm::Gd, None, &config, &radii, 8, 3).unwrap();
        let eta = 0.5; // the family's default step size
        for (r, s) in radii.iter().zip(profile.sups()) {
            let law = eta * eps_n * r;
            assert!(
                (s - law).abs() <= 1e-12,
                "r = {r}: measured {s} vs analytic {law}"
            );
        }
        let gamma = profile.gamma_hat().unwrap();
        assert!((gamma - 1.0).abs() <= 0.1, "gamma_hat = {gamma}");
        assert!(profile.inner_radius().is_none());
    }

    #[test]
    fn polynomial_newton_profile_decays_with_exponent_one() {
        let spec = PolynomialSpec::new(4.0, 2.0, 1e-4, 1).unwrap();
        let model = ModelSpec::Polynomial(spec);
        let profile = perturbation_profile(
            &model,
            Algorithm::Newton,
            None,
            &AlgorithmConfig::default(),
            &geometric_radii(0.03, 0.5, 12),
            8,
            5,
        )
        .unwrap();
        let gamma = profile.gamma_hat().unwrap();
        assert!(
            (gamma + 1.0).abs() <= 0.15,
            "gamma_hat = {gamma}, expected about -1"
        );
    }

    #[test]
    fn newton_break_radius_tracks_the_perturbed_minimizer() {
        let eps_n = 1e-4;
        let spec = PolynomialSpec::new(4.0, 2.0, eps_n, 1).unwrap();
        let scale = spec.perturbed_minimizer_norm(); // eps_n^{1/(p-q)} = 0.01
        let model = ModelSpec::Polynomial(spec);
        let profile = perturbation_profile(
            &model,
            Algorithm::Newton,
            None,
            &AlgorithmConfig::default(),
            &geometric_radii(0.002, 0.5, 24),
            8,
            11,
        )
        .unwrap();
        let r_tilde = profile.inner_radius().expect("unstable profile");
        assert!(
            r_tilde >= scale / 3.0 && r_tilde <= scale * 3.0,
            "r_tilde = {r_tilde}, expected within factor 3 of {scale}"
        );
        assert_eq!(detect_inner_radius(&profile).unwrap(), r_tilde);
    }

    #[test]
    fn detect_inner_radius_rejects_stable_profiles() {
        let radii = geometric_radii(0.01, 0.5, 8);
        let sups: Vec<f64> = radii.iter().map(|r| 0.2 * r).collect();
        let profile =
            StabilityProfile::from_measurements(radii, sups, vec![2; 8], 2).unwrap();
        assert!(profile.gamma_hat().unwrap() > 0.0);
        assert!(profile.inner_radius().is_none());
        let err = detect_inner_radius(&profile).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn pure_power_law_falls_back_to_smallest_radius() {
        let radii = geometric_radii(0.01, 0.5, 8);
        let sups: Vec<f64> = radii.iter().map(|r| 0.3 / r).collect();
        let profile =
            StabilityProfile::from_measurements(radii.clone(), sups, vec![2; 8], 2).unwrap();
        assert_eq!(detect_inner_radius(&profile).unwrap(), radii[0]);
        assert_eq!(profile.inner_radius(), Some(radii[0]));
    }

    #[test]
    fn profile_is_deterministic_and_probe_monotone() {
        use crate::models::gen_regression;
        let model = ModelSpec::Regression { d: 2, p: 1 };
        let data = Dataset::Regression(gen_regression(60, 2, 1, None, 42).unwrap());
        let config = AlgorithmConfig::default();
        let radii = [0.1, 0.2, 0.4];
        let run = |probes: usize| {
            perturbation_profile(
                &model,
                Algorithm::Gd,
                Some(&data),
                &config,
                &radii,
                probes,
                9,
            )
            .unwrap()
        };
        let a = run(8);
        let b = run(8);
        assert_eq!(a, b, "same seed must reproduce the profile bit for bit");
        let doubled = run(16);
        for (s8, s16) in a.sups().iter().zip(doubled.sups()) {
            assert!(s16 >= s8, "doubling probes lowered a sup: {s16} < {s8}");
        }
    }

    #[test]
    fn profile_validates_inputs() {
        let spec = PolynomialSpec::new(4.0, 2.0, 1e-3, 1).unwrap();
        let model = ModelSpec::Polynomial(spec);
        let config = AlgorithmConfig::default();
        let bad_order = perturbation_profile(
            &model,
            Algorithm::Gd,
            None,
            &config,
            &[0.2, 0.1],
            8,
            0,
        );
        assert!(bad_order.is_err());
        let out_of_ball =
            perturbation_profile(&model, Algorithm::Gd, None, &config, &[0.5, 1.5], 8, 0);
        assert!(out_of_ball.is_err());
        let model2 = ModelSpec::Regression { d: 2, p: 1 };
        let data = Dataset::Regression(crate::models::gen_regression(40, 2, 1, None, 4).unwrap());
        let few_probes = perturbation_profile(
            &model2,
            Algorithm::Gd,
            Some(&data),
            &config,
            &[0.1, 0.2],
            4,
            0,
        );
        assert!(few_probes.is_err());
    }
}
