//! Experiment orchestration: Monte-Carlo sweeps over sample sizes,
//! population-rate measurements, the deterministic power-law suite, the
//! Newton escape demonstration, and CSV emission.
//!
//! Every run is reproducible: a sweep cell's generator seed is derived
//! from the master seed and the cell coordinates, cells execute
//! independently (possibly in parallel) and are sorted before emission, so
//! the output is byte-identical regardless of scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::algorithms::{is_supported, make_operator, Algorithm, AlgorithmConfig};
use crate::analysis::{classify_convergence, ConvergenceClass};
use crate::error::{Error, Result};
use crate::models::{
    gen_mixture, gen_nonresponse, gen_regression, CounterexampleSpec, Dataset, Level, ModelSpec,
    PolynomialSpec,
};
use crate::operator::{
    best_iterate_error, iterate, iterate_until, IterationTrace, Operator, TerminationReason,
};
use crate::point::ParamPoint;
use crate::seeding::mix;

/// How a sweep cell picks its starting point.
#[derive(Clone, Debug, PartialEq)]
pub enum InitRule {
    /// Offset from the fixed point along the first axis.
    Offset(f64),
    /// Midpoint of an annulus (r_in + r_out)/2 along the first axis.
    Annulus { r_in: f64, r_out: f64 },
    /// An explicit starting point.
    Fixed(Vec<f64>),
    /// The per-algorithm default: half the analysis radius for the
    /// gradient-flavoured schemes, max(10·n^{−1/4}, 0.05) for the
    /// curvature-driven ones, whose theory starts from an annulus.
    Default,
}

/// Threshold that defines the hit iteration of a sweep cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    /// A fixed error level.
    Absolute(f64),
    /// c·n^{−a}, tracking a statistical radius; requires a > 0.
    PowerLaw { c: f64, a: f64 },
}

impl ThresholdRule {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            ThresholdRule::Absolute(v) => *v,
            ThresholdRule::PowerLaw { c, a } => c * (n as f64).powf(-a),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ThresholdRule::Absolute(v) => {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(Error::validation("absolute threshold must be > 0"));
                }
            }
            ThresholdRule::PowerLaw { c, a } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::validation("threshold constant must be > 0"));
                }
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::validation("threshold exponent must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// One Monte-Carlo sweep: a model, a set of algorithms, a grid of sample
/// sizes, and a trial count per cell.
///
/// For the statistical families each cell draws a fresh dataset of size n.
/// For the deterministic families the n-grid sets the perturbation scale
/// instead (εₙ or bump scale n^{−1/2}), and trials are replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub algorithms: Vec<Algorithm>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub init: InitRule,
    pub threshold: ThresholdRule,
    pub max_iters: usize,
    /// Step-size / cubic-weight overrides; each is forwarded only to the
    /// algorithm that consumes it.
    pub algorithm_config: AlgorithmConfig,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        self.model.dim(); // panics never; ModelSpec is validated at construction
        if self.algorithms.is_empty() {
            return Err(Error::validation("at least one algorithm is required"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::validation(format!("duplicate algorithm '{a}'")));
            }
            if !is_supported(&self.model, *a) {
                return Err(Error::validation(format!(
                    "algorithm '{a}' is not supported for model '{}'",
                    self.model.name()
                )));
            }
        }
        if self.n_grid.is_empty() {
            return Err(Error::validation("the n-grid must not be empty"));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::validation("sample sizes must be >= 1"));
        }
        for w in self.n_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::validation("the n-grid must be strictly ascending"));
            }
        }
        if self.trials == 0 {
            return Err(Error::validation("trials must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::validation("max_iters must be >= 1"));
        }
        if let InitRule::Annulus { r_in, r_out } = self.init {
            if !(r_in.is_finite() && r_out.is_finite() && 0.0 < r_in && r_in < r_out) {
                return Err(Error::validation("annulus needs 0 < r_in < r_out"));
            }
        }
        if let InitRule::Fixed(v) = &self.init {
            if v.len() != self.model.dim() {
                return Err(Error::validation(format!(
                    "fixed init has dimension {}, model has {}",
                    v.len(),
                    self.model.dim()
                )));
            }
        }
        self.threshold.validate()
    }
}

/// One (algorithm, n, trial) cell outcome. Errors are distances to the
/// true parameter at the origin. A `failed` row records a cell whose
/// operator could not be built or evaluated; its error fields are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub model: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub trial: usize,
    pub seed: u64,
    pub final_error: f64,
    pub min_error: f64,
    pub hit_iteration: Option<usize>,
    pub iterations_run: usize,
    pub failed: bool,
}

/// Per-(algorithm, n) aggregation over trials. Medians are over the
/// non-failed rows; the hit median is over the rows that hit.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub failures: usize,
    pub hits: usize,
    pub median_final_error: Option<f64>,
    pub median_hit_iteration: Option<f64>,
}

/// All rows of a sweep, sorted by (algorithm order, n, trial), plus the
/// per-cell-group medians.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

pub(crate) fn cell_seed(master: u64, alg_idx: usize, n: usize, trial: usize) -> u64 {
    mix(&[master, alg_idx as u64, n as u64, trial as u64])
}

fn config_for(algorithm: Algorithm, base: &AlgorithmConfig) -> AlgorithmConfig {
    AlgorithmConfig {
        eta: if algorithm == Algorithm::Gd { base.eta } else { None },
        cubic_l: if algorithm == Algorithm::Cnm { base.cubic_l } else { None },
    }
}

/// Instantiates the model and data for one cell. Statistical families get
/// a dataset of size n; the deterministic families get their perturbation
/// scale set to n^{−1/2}.
pub fn materialize(model: &ModelSpec, n: usize, seed: u64) -> Result<(ModelSpec, Option<Dataset>)> {
    match model {
        ModelSpec::NonResponse => Ok((
            model.clone(),
            Some(Dataset::NonResponse(gen_nonresponse(n, 0.0, seed)?)),
        )),
        ModelSpec::Mixture { d } => Ok((
            model.clone(),
            Some(Dataset::Mixture(gen_mixture(n, *d, seed)?)),
        )),
        ModelSpec::Regression { d, p } => Ok((
            model.clone(),
            Some(Dataset::Regression(gen_regression(n, *d, *p, None, seed)?)),
        )),
        ModelSpec::Polynomial(spec) => {
            let eps_n = (n as f64).powf(-0.5);
            let fresh = PolynomialSpec::new(spec.p, spec.q, eps_n, spec.d)?;
            Ok((ModelSpec::Polynomial(fresh), None))
        }
        ModelSpec::Counterexample(_) => {
            let fresh = CounterexampleSpec::new(n as u64)?;
            Ok((ModelSpec::Counterexample(fresh), None))
        }
    }
}

fn initial_point(rule: &InitRule, algorithm: Algorithm, n: usize, model: &ModelSpec) -> Result<ParamPoint> {
    let d = model.dim();
    let along_first_axis = |r: f64| -> Result<ParamPoint> {
        let mut coords = vec![0.0; d];
        coords[0] = r;
        ParamPoint::new(coords)
    };
    match rule {
        InitRule::Offset(r) => along_first_axis(*r),
        InitRule::Annulus { r_in, r_out } => along_first_axis(0.5 * (r_in + r_out)),
        InitRule::Fixed(v) => ParamPoint::new(v.clone()),
        InitRule::Default => match algorithm {
            Algorithm::Gd | Algorithm::Em => along_first_axis(0.5 * model.rho()),
            Algorithm::Newton | Algorithm::Cnm => {
                along_first_axis((10.0 * (n as f64).powf(-0.25)).max(0.05))
            }
        },
    }
}

fn run_cell(cfg: &SweepConfig, alg_idx: usize, n: usize, trial: usize) -> SweepRow {
    let algorithm = cfg.algorithms[alg_idx];
    let seed = cell_seed(cfg.master_seed, alg_idx, n, trial);
    let mut row = SweepRow {
        model: cfg.model.name().to_string(),
        algorithm,
        n,
        d: cfg.model.dim(),
        trial,
        seed,
        final_error: f64::NAN,
        min_error: f64::NAN,
        hit_iteration: None,
        iterations_run: 0,
        failed: true,
    };
    let outcome = (|| -> Result<(IterationTrace, Option<usize>)> {
        let (model, data) = materialize(&cfg.model, n, seed)?;
        let config = config_for(algorithm, &cfg.algorithm_config);
        let op = make_operator(&model, algorithm, Level::Sample, data.as_ref(), &config)?;
        let theta0 = initial_point(&cfg.init, algorithm, n, &model)?;
        let target = ParamPoint::zero(model.dim());
        iterate_until(&op, &theta0, &target, cfg.threshold.value(n), cfg.max_iters)
    })();
    if let Ok((trace, hit)) = outcome {
        row.final_error = trace.final_entry().error;
        row.min_error = best_iterate_error(&trace, &ParamPoint::zero(row.d)).1;
        row.hit_iteration = hit;
        row.iterations_run = trace.len() - 1;
        row.failed = false;
    }
    row
}

fn median_of(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("medians are over finite values"));
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Per-(algorithm, n) medians over a row set. Algorithms keep their order
/// of first appearance, so summarizing a sorted sweep reproduces the
/// sweep's own summary; the function also works on rows loaded from a CSV.
pub fn summarize_rows(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut order: Vec<Algorithm> = Vec::new();
    for row in rows {
        if !order.contains(&row.algorithm) {
            order.push(row.algorithm);
        }
    }
    let mut grouped: BTreeMap<(usize, usize), Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        let alg_idx = order
            .iter()
            .position(|a| *a == row.algorithm)
            .expect("order covers every algorithm present");
        grouped.entry((alg_idx, row.n)).or_default().push(row);
    }
    grouped
        .into_iter()
        .map(|((alg_idx, n), group)| {
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| !r.failed).collect();
            let finals: Vec<f64> = ok.iter().map(|r| r.final_error).collect();
            let hits: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.hit_iteration.map(|h| h as f64))
                .collect();
            SummaryRow {
                model: group[0].model.clone(),
                algorithm: order[alg_idx],
                n,
                d: group[0].d,
                trials: group.len(),
                failures: group.len() - ok.len(),
                hits: hits.len(),
                median_final_error: median_of(finals),
                median_hit_iteration: median_of(hits),
            }
        })
        .collect()
}

/// Runs the full (algorithm × n × trial) grid, in parallel, and returns
/// rows sorted by (algorithm order, n, trial) together with the medians.
///
/// Each cell stops at the first iterate whose error drops to the threshold
/// (or at the budget). Stopping there matters: the true parameter sits at
/// the origin, and for about half of all datasets the sample objective has
/// its minimizer exactly there, so an open-ended run would slide far below
/// the statistical scale on those draws and the per-cell final errors would
/// split into two clusters. The stopped iterate is the estimate the scaling
/// laws describe.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for alg_idx in 0..cfg.algorithms.len() {
        for &n in &cfg.n_grid {
            for trial in 0..cfg.trials {
                cells.push((alg_idx, n, trial));
            }
        }
    }
    let mut keyed: Vec<((usize, usize, usize), SweepRow)> = cells
        .par_iter()
        .map(|&(alg_idx, n, trial)| ((alg_idx, n, trial), run_cell(cfg, alg_idx, n, trial)))
        .collect();
    keyed.sort_by_key(|(key, _)| *key);
    let rows: Vec<SweepRow> = keyed.into_iter().map(|(_, row)| row).collect();
    let summary = summarize_rows(&rows);
    Ok(SweepResult { rows, summary })
}

/// A population-level trace with its convergence classification.
#[derive(Clone, Debug)]
pub struct PopulationRate {
    pub algorithm: Algorithm,
    pub trace: IterationTrace,
    /// None when the trace is identically at the fixed point (nothing to
    /// classify).
    pub class: Option<ConvergenceClass>,
}

/// Iterates each algorithm's population operator from `theta0` and
/// classifies the decay of the error.
pub fn run_population_rates(
    model: &ModelSpec,
    algorithms: &[Algorithm],
    base_config: &AlgorithmConfig,
    theta0: &ParamPoint,
    iters: usize,
) -> Result<Vec<PopulationRate>> {
    if algorithms.is_empty() {
        return Err(Error::validation("at least one algorithm is required"));
    }
    let target = ParamPoint::zero(model.dim());
    let mut out = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let config = config_for(algorithm, base_config);
        let op = make_operator(model, algorithm, Level::Population, None, &config)?;
        let trace = iterate(&op, theta0, iters, &target)?;
        let class = if trace.entries().iter().all(|e| e.error == 0.0) {
            None
        } else {
            Some(classify_convergence(&trace)?)
        };
        out.push(PopulationRate { algorithm, trace, class });
    }
    Ok(out)
}

/// Calibrated constants of the power-law suite, one per algorithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop4Constants {
    pub gd: f64,
    pub nm: f64,
    pub cnm: f64,
}

/// One (algorithm, εₙ) check of the power-law suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop4Entry {
    pub algorithm: Algorithm,
    pub eps_n: f64,
    /// The statistical floor εₙ^{1/(p−q)}.
    pub floor: f64,
    /// Every iterate stayed at or above the floor.
    pub floor_ok: bool,
    /// First iteration with error ≤ 2·floor, if reached.
    pub hit_iteration: Option<usize>,
    /// The calibrated iteration budget for this εₙ.
    pub budget: usize,
    pub within_budget: bool,
    /// Gradient descent only: the error was still above 2·floor after a
    /// tenth of the budget, witnessing that the budget's growth is real.
    pub early_check: Option<bool>,
    pub pass: bool,
}

/// Outcome of [`run_proposition4_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct Prop4Report {
    pub p: f64,
    pub q: f64,
    pub constants: Prop4Constants,
    pub entries: Vec<Prop4Entry>,
}

impl Prop4Report {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Hit iterations of one algorithm in `eps_list` order.
    pub fn hits_for(&self, algorithm: Algorithm) -> Vec<(f64, Option<usize>)> {
        self.entries
            .iter()
            .filter(|e| e.algorithm == algorithm)
            .map(|e| (e.eps_n, e.hit_iteration))
            .collect()
    }
}

struct LeanRun {
    floor_ok: bool,
    hit: Option<usize>,
    early_above: Option<bool>,
}

/// Iterates without storing a trace; large budgets make stored traces
/// wasteful here. Tracks the floor violation flag, the first hit of
/// `threshold`, and whether the error was still above `threshold` at
/// `early_t`.
fn lean_run(
    op: &impl Operator,
    floor: f64,
    threshold: f64,
    early_t: Option<usize>,
    max_iters: usize,
) -> Result<LeanRun> {
    let mut theta = ParamPoint::scalar(1.0)?;
    let mut run = LeanRun { floor_ok: true, hit: None, early_above: None };
    for t in 1..=max_iters {
        theta = op.apply(&theta)?;
        let err = theta.norm();
        if !err.is_finite() {
            return Err(Error::NonFinite {
                context: "power-law suite iterate".to_string(),
                iteration: Some(t),
            });
        }
        if err < floor {
            run.floor_ok = false;
        }
        if early_t == Some(t) {
            run.early_above = Some(err > threshold);
        }
        if err <= threshold {
            run.hit = Some(t);
            break;
        }
    }
    Ok(run)
}

fn prop4_rate(algorithm: Algorithm, p: f64, q: f64, eps: f64) -> f64 {
    match algorithm {
        Algorithm::Gd => eps.powf(-(p - 2.0) / (p - q)),
        Algorithm::Newton => (1.0 / eps).ln(),
        Algorithm::Cnm => eps.powf(-(p - 3.0) / (p - 1.0)),
        Algorithm::Em => unreachable!("EM is not part of the power-law suite"),
    }
}

/// Deterministic iteration-complexity suite on the power-law pair.
///
/// For each εₙ the three schemes start at |θ0| = 1 on the perturbed
/// objective and must (i) never drop below the floor εₙ^{1/(p−q)},
/// (ii) reach 2·floor within an algorithm-specific budget, and, for
/// gradient descent, (iii) still be above 2·floor after a tenth of the
/// budget. Budgets are C·εₙ^{−(p−2)/(p−q)} (gradient descent),
/// C·log(1/εₙ) (Newton) and C·εₙ^{−(p−3)/(p−1)} (cubic-regularized
/// Newton), with each C calibrated once at the largest εₙ (observed hit
/// time × 1.3) and reused for the rest of the list.
pub fn run_proposition4_suite(p: f64, q: f64, eps_list: &[f64]) -> Result<Prop4Report> {
    if eps_list.is_empty() {
        return Err(Error::validation("eps_list must not be empty"));
    }
    if eps_list.iter().any(|e| !e.is_finite() || *e <= 0.0 || *e >= 1.0) {
        return Err(Error::validation("every eps_n must lie in (0, 1)"));
    }
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    eps_sorted.dedup();
    let eps0 = eps_sorted[0];

    let algorithms = [Algorithm::Gd, Algorithm::Newton, Algorithm::Cnm];
    let build = |algorithm: Algorithm, eps: f64| -> Result<_> {
        let spec = PolynomialSpec::new(p, q, eps, 1)?;
        make_operator(
            &ModelSpec::Polynomial(spec),
            algorithm,
            Level::Sample,
            None,
            &AlgorithmConfig::default(),
        )
    };

    // Calibration at the largest eps: measure the true hit time.
    let mut constants = Prop4Constants { gd: 0.0, nm: 0.0, cnm: 0.0 };
    for algorithm in algorithms {
        let floor = eps0.powf(1.0 / (p - q));
        let op = build(algorithm, eps0)?;
        let rate = prop4_rate(algorithm, p, q, eps0);
        let cap = (40.0 * rate).ceil().max(10_000.0) as usize;
        let run = lean_run(&op, floor, 2.0 * floor, None, cap)?;
        let Some(hit) = run.hit else {
            return Err(Error::validation(format!(
                "calibration did not converge: {algorithm} at eps = {eps0} never reached twice the floor within {cap} iterations"
            )));
        };
        let c = 1.3 * hit as f64 / rate;
        match algorithm {
            Algorithm::Gd => constants.gd = c,
            Algorithm::Newton => constants.nm = c,
            Algorithm::Cnm => constants.cnm = c,
            Algorithm::Em => unreachable!(),
        }
    }

    let mut entries = Vec::new();
    for &eps in &eps_sorted {
        let floor = eps.powf(1.0 / (p - q));
        for algorithm in algorithms {
            let c = match algorithm {
                Algorithm::Gd => constants.gd,
                Algorithm::Newton => constants.nm,
                Algorithm::Cnm => constants.cnm,
                Algorithm::Em => unreachable!(),
            };
            let budget = (c * prop4_rate(algorithm, p, q, eps)).ceil().max(2.0) as usize;
            if budget as f64 > 1e9 {
                return Err(Error::validation(format!(
                    "budget for {algorithm} at eps = {eps} is {budget}, beyond what this suite will run"
                )));
            }
            let early_t = (algorithm == Algorithm::Gd)
                .then(|| ((budget as f64 * 0.1).floor() as usize).max(1));
            let op = build(algorithm, eps)?;
            let run = lean_run(&op, floor, 2.0 * floor, early_t, budget)?;
            let within_budget = run.hit.is_some();
            // A hit at or before the early checkpoint means the error was
            // already at the target there: the early check fails.
            let early_check = early_t.map(|et| match run.hit {
                Some(h) => h > et && run.early_above.unwrap_or(false),
                None => run.early_above.unwrap_or(true),
            });
            let pass = run.floor_ok && within_budget && early_check.unwrap_or(true);
            entries.push(Prop4Entry {
                algorithm,
                eps_n: eps,
                floor,
                floor_ok: run.floor_ok,
                hit_iteration: run.hit,
                budget,
                within_budget,
                early_check,
                pass,
            });
        }
    }
    Ok(Prop4Report { p, q, constants, entries })
}

/// Outcome of the Newton escape demonstration.
#[derive(Clone, Debug)]
pub struct EscapeReport {
    /// Trace started below the inner radius, in the degenerate sliver.
    pub below: IterationTrace,
    /// Trace started in the annulus above the inner radius.
    pub annulus: IterationTrace,
    /// The below-start iteration ended within 0.5 of the spurious
    /// maximizer at 2.
    pub below_escaped: bool,
    /// Every iterate of the annulus run stayed inside B(0, 0.5).
    pub annulus_contained: bool,
    /// The near-origin hump radius √(c/2) separating the two behaviours.
    pub inner_radius: f64,
}

/// Runs sample Newton on the escape objective from two starting points:
/// one below the hump radius and one above it, recording whether the
/// first escapes toward θ = 2 and whether the second stays local. With
/// `iters` = 0 the traces contain only the starting points.
pub fn run_escape_demo(
    n: usize,
    init_below: f64,
    init_annulus: f64,
    iters: usize,
) -> Result<EscapeReport> {
    let spec = CounterexampleSpec::new(n as u64)?;
    let inner_radius = spec.hump_radius();
    if !(init_below > 0.0 && init_below < inner_radius) {
        return Err(Error::validation(format!(
            "init_below must lie in (0, {inner_radius}), got {init_below}"
        )));
    }
    if !(init_annulus > inner_radius && init_annulus.is_finite()) {
        return Err(Error::validation(format!(
            "init_annulus must exceed the hump radius {inner_radius}, got {init_annulus}"
        )));
    }
    let model = ModelSpec::Counterexample(spec);
    let op = make_operator(
        &model,
        Algorithm::Newton,
        Level::Sample,
        None,
        &AlgorithmConfig::default(),
    )?;
    let target = ParamPoint::zero(1);
    let run = |init: f64| -> Result<IterationTrace> {
        let theta0 = ParamPoint::scalar(init)?;
        if iters == 0 {
            IterationTrace::from_points(target.clone(), vec![theta0], TerminationReason::MaxIters)
        } else {
            iterate(&op, &theta0, iters, &target)
        }
    };
    let below = run(init_below)?;
    let annulus = run(init_annulus)?;
    let below_escaped = (below.final_entry().point.as_scalar() - 2.0).abs() <= 0.5;
    let annulus_contained = annulus.entries().iter().all(|e| e.error <= 0.5);
    Ok(EscapeReport { below, annulus, below_escaped, annulus_contained, inner_radius })
}

/// Scans starting points below the hump radius for one whose Newton
/// iteration ends within 0.5 of the spurious maximizer at 2.
///
/// The escaping starts sit in a narrow sliver where the sample curvature
/// is about to change sign, so the scan uses a fine deterministic grid
/// over (hump/2, hump); `None` means no grid point escaped within `iters`
/// steps.
pub fn find_escaping_init(n: usize, iters: usize) -> Result<Option<f64>> {
    if iters == 0 {
        return Err(Error::validation("iters must be >= 1"));
    }
    let spec = CounterexampleSpec::new(n as u64)?;
    let hump = spec.hump_radius();
    let model = ModelSpec::Counterexample(spec);
    let op = make_operator(
        &model,
        Algorithm::Newton,
        Level::Sample,
        None,
        &AlgorithmConfig::default(),
    )?;
    let lo = 0.5 * hump;
    let steps = 2000;
    'grid: for k in 0..steps {
        let init = lo + (hump - lo) * (k as f64) / (steps as f64);
        let mut theta = init;
        for _ in 0..iters {
            let next = match op.apply(&ParamPoint::scalar(theta)?) {
                Ok(p) => p.as_scalar(),
                Err(_) => continue 'grid,
            };
            if !next.is_finite() || next.abs() > 1e3 {
                continue 'grid;
            }
            theta = next;
        }
        if (theta - 2.0).abs() <= 0.5 {
            return Ok(Some(init));
        }
    }
    Ok(None)
}

fn map_csv_err(path: &Path, e: csv::Error) -> Error {
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        _ => Error::Parse { path: path.to_path_buf(), message },
    }
}

const ROW_HEADER: [&str; 11] = [
    "model",
    "algorithm",
    "n",
    "d",
    "trial",
    "seed",
    "final_error",
    "min_error",
    "hit_iteration",
    "iterations_run",
    "failed",
];

const SUMMARY_HEADER: [&str; 9] = [
    "model",
    "algorithm",
    "n",
    "d",
    "trials",
    "failures",
    "hits",
    "median_final_error",
    "median_hit_iteration",
];

/// The sibling path that [`emit_csv`] writes the medians to.
pub fn summary_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().map_or_else(
        || "sweep".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    name.push_str(".summary.csv");
    path.with_file_name(name)
}

/// Writes the raw rows to `path` and the medians to the sibling summary
/// file. Floats use shortest round-trip formatting, so re-running an
/// identical sweep reproduces both files byte for byte.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| map_csv_err(path, e))?;
    w.write_record(ROW_HEADER).map_err(|e| map_csv_err(path, e))?;
    for row in &result.rows {
        let record = [
            row.model.clone(),
            row.algorithm.to_string(),
            row.n.to_string(),
            row.d.to_string(),
            row.trial.to_string(),
            row.seed.to_string(),
            row.final_error.to_string(),
            row.min_error.to_string(),
            row.hit_iteration.map_or_else(String::new, |h| h.to_string()),
            row.iterations_run.to_string(),
            row.failed.to_string(),
        ];
        w.write_record(&record).map_err(|e| map_csv_err(path, e))?;
    }
    w.flush()
        .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;

    let spath = summary_path(path);
    let mut sw = csv::Writer::from_path(&spath).map_err(|e| map_csv_err(&spath, e))?;
    sw.write_record(SUMMARY_HEADER)
        .map_err(|e| map_csv_err(&spath, e))?;
    for row in &result.summary {
        let record = [
            row.model.clone(),
            row.algorithm.to_string(),
            row.n.to_string(),
            row.d.to_string(),
            row.trials.to_string(),
            row.failures.to_string(),
            row.hits.to_string(),
            row.median_final_error
                .map_or_else(String::new, |v| v.to_string()),
            row.median_hit_iteration
                .map_or_else(String::new, |v| v.to_string()),
        ];
        sw.write_record(&record).map_err(|e| map_csv_err(&spath, e))?;
    }
    sw.flush()
        .map_err(|e| Error::Io { path: spath.clone(), source: e })?;
    Ok(())
}

/// Reads back a row file written by [`emit_csv`].
pub fn load_sweep_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| map_csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| map_csv_err(path, e))?;
    if headers.iter().collect::<Vec<_>>() != ROW_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {:?}", headers),
        });
    }
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        message: format!("row {row}: {message}"),
    };
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| map_csv_err(path, e))?;
        let row = i + 1;
        let get = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| parse_err(row, format!("missing field {idx}")))
        };
        rows.push(SweepRow {
            model: get(0)?.to_string(),
            algorithm: get(1)?
                .parse()
                .map_err(|e: Error| parse_err(row, e.to_string()))?,
            n: get(2)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad n: {e}")))?,
            d: get(3)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad d: {e}")))?,
            trial: get(4)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad trial: {e}")))?,
            seed: get(5)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad seed: {e}")))?,
            final_error: get(6)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad final_error: {e}")))?,
            min_error: get(7)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad min_error: {e}")))?,
            hit_iteration: {
                let raw = get(8)?;
                if raw.is_empty() {
                    None
                } else {
                    Some(
                        raw.parse()
                            .map_err(|e| parse_err(row, format!("bad hit_iteration: {e}")))?,
                    )
                }
            },
            iterations_run: get(9)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad iterations_run: {e}")))?,
            failed: get(10)?
                .parse()
                .map_err(|e| parse_err(row, format!("bad failed flag: {e}")))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::RateMode;

    fn tiny_mixture_sweep() -> SweepConfig {
        SweepConfig {
            model: ModelSpec::Mixture { d: 1 },
            algorithms: vec![Algorithm::Em],
            n_grid: vec![64],
            trials: 1,
            master_seed: 11,
            init: InitRule::Offset(0.5),
            threshold: ThresholdRule::Absolute(1e-3),
            max_iters: 200,
            algorithm_config: AlgorithmConfig::default(),
        }
    }

    #[test]
    fn sweep_is_bit_reproducible() {
        let cfg = tiny_mixture_sweep();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.summary, b.summary);
        assert!(!a.rows[0].failed);
    }

    #[test]
    fn cell_seeds_are_pairwise_distinct() {
        let mut seen = std::collections::HashSet::new();
        for alg_idx in 0..10 {
            for n in 1..=100usize {
                for trial in 0..100 {
                    seen.insert(cell_seed(42, alg_idx, n, trial));
                }
            }
        }
        assert_eq!(seen.len(), 100_000);
    }

    #[test]
    fn summary_medians_match_recomputation() {
        let cfg = SweepConfig {
            model: ModelSpec::Regression { d: 1, p: 1 },
            algorithms: vec![Algorithm::Gd, Algorithm::Newton],
            n_grid: vec![128, 256],
            trials: 5,
            master_seed: 3,
            init: InitRule::Default,
            threshold: ThresholdRule::PowerLaw { c: 3.0, a: 0.25 },
            max_iters: 400,
            algorithm_config: AlgorithmConfig::default(),
        };
        let result = run_sweep(&cfg).unwrap();
        assert_eq!(result.rows.len(), 2 * 2 * 5);
        for s in &result.summary {
            let finals: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.algorithm == s.algorithm && r.n == s.n && !r.failed)
                .map(|r| r.final_error)
                .collect();
            assert_eq!(s.median_final_error, median_of(finals));
        }
    }

    #[test]
    fn sweep_config_validation() {
        let mut cfg = tiny_mixture_sweep();
        cfg.algorithms = vec![Algorithm::Gd]; // unsupported for the mixture
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = tiny_mixture_sweep();
        cfg.n_grid = vec![128, 64];
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = tiny_mixture_sweep();
        cfg.trials = 0;
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = tiny_mixture_sweep();
        cfg.threshold = ThresholdRule::PowerLaw { c: 3.0, a: 0.0 };
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn population_rates_on_flat_regression() {
        let model = ModelSpec::Regression { d: 1, p: 1 };
        let theta0 = ParamPoint::scalar(0.9).unwrap();
        let rates = run_population_rates(
            &model,
            &[Algorithm::Newton, Algorithm::Cnm],
            &AlgorithmConfig::default(),
            &theta0,
            300,
        )
        .unwrap();
        let newton = &rates[0];
        let class = newton.class.as_ref().unwrap();
        assert!(matches!(class.mode, RateMode::Fast { kappa_hat } if (kappa_hat - 2.0/3.0).abs() < 0.01));
        let cnm = &rates[1];
        let class = cnm.class.as_ref().unwrap();
        assert!(
            matches!(class.mode, RateMode::Slow { beta_hat } if beta_hat > 1.8 && beta_hat < 2.2),
            "cnm class: {:?}",
            class.mode
        );
    }

    #[test]
    fn population_rates_skip_classification_at_fixed_point() {
        // Gradient descent maps the fixed point to itself, so every error
        // is exactly zero and there is nothing to classify. (Newton cannot
        // even start there: its Hessian is singular at the fixed point.)
        let model = ModelSpec::Regression { d: 1, p: 1 };
        let rates = run_population_rates(
            &model,
            &[Algorithm::Gd],
            &AlgorithmConfig::default(),
            &ParamPoint::zero(1),
            50,
        )
        .unwrap();
        assert!(rates[0].class.is_none());
    }

    #[test]
    fn proposition4_suite_passes_for_main_pair() {
        let report = run_proposition4_suite(4.0, 2.0, &[1e-3, 1e-4]).unwrap();
        assert!(report.all_pass(), "entries: {:#?}", report.entries);
        // Floors shrink by the exact exponent factor when eps halves.
        let floors: Vec<f64> = report
            .entries
            .iter()
            .filter(|e| e.algorithm == Algorithm::Gd)
            .map(|e| e.floor)
            .collect();
        assert!((floors[0] / floors[1] - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn escape_demo_finds_both_behaviours() {
        let n = 10_000;
        let init = find_escaping_init(n, 60).unwrap().expect("an escaping start exists");
        let annulus = (n as f64).powf(-0.25);
        let report = run_escape_demo(n, init, annulus, 60).unwrap();
        assert!(report.below_escaped, "final: {:?}", report.below.final_entry());
        assert!(report.annulus_contained);
        assert!(init < report.inner_radius);
        assert!((report.inner_radius - (0.01f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn escape_demo_zero_iters_keeps_inits() {
        let report = run_escape_demo(10_000, 0.03, 0.2, 0).unwrap();
        assert_eq!(report.below.len(), 1);
        assert_eq!(report.annulus.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let cfg = tiny_mixture_sweep();
        let result = run_sweep(&cfg).unwrap();
        emit_csv(&result, &path).unwrap();
        let loaded = load_sweep_rows(&path).unwrap();
        assert_eq!(loaded, result.rows);
        assert!(summary_path(&path).exists());
        let empty = SweepResult { rows: vec![], summary: vec![] };
        let epath = dir.path().join("empty.csv");
        emit_csv(&empty, &epath).unwrap();
        let text = std::fs::read_to_string(&epath).unwrap();
        assert_eq!(text.lines().count(), 1, "header only");
        assert!(load_sweep_rows(&epath).unwrap().is_empty());
    }
}
