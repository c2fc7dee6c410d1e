//! Subcommand implementations. Parameter resolution (flag, then config
//! file, then default) lives here; the numerics come from the library.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use oplab::algorithms::{make_operator, Algorithm, AlgorithmConfig};
use oplab::analysis::{classify_convergence, perturbation_profile, ConvergenceClass, RateMode};
use oplab::epoch::epoch_schedule;
use oplab::error::Error;
use oplab::experiments::{
    emit_csv, find_escaping_init, load_sweep_rows, materialize, run_escape_demo,
    run_population_rates, run_proposition4_suite, run_sweep, summarize_rows, summary_path,
    InitRule, SweepConfig, SweepResult, ThresholdRule,
};
use oplab::models::{
    load_dataset, save_dataset, CounterexampleSpec, Level, ModelSpec, PolynomialSpec,
};
use oplab::operator::{iterate, iterate_until, IterationTrace};
use oplab::plot::{emit_plot, plot_profile, plot_traces};
use oplab::point::ParamPoint;

use crate::config::FileConfig;
use crate::{
    EpochsArgs, EscapeArgs, GenDataArgs, ModelArgs, PlotArgs, PopRatesArgs, Prop4Args, RunArgs,
    StabilityArgs, SweepArgs,
};

/// Builds the model spec from the shared selection flags. `n` feeds the
/// perturbation scale of the deterministic families and is ignored by the
/// statistical ones.
fn build_model(args: &ModelArgs, cfg: &FileConfig, n: usize) -> anyhow::Result<ModelSpec> {
    let name: String = cfg.require(args.model.clone(), "model")?;
    let d = cfg.resolve(args.d, "d")?;
    let p = cfg.resolve(args.p, "p")?;
    let q = cfg.resolve(args.q, "q")?;

    let no_d = || -> anyhow::Result<()> {
        if d.is_some_and(|d| d != 1) {
            Err(Error::validation(format!("model {name} is scalar; drop --d")).into())
        } else {
            Ok(())
        }
    };
    let no_p = || -> anyhow::Result<()> {
        if p.is_some() {
            Err(Error::validation(format!("model {name} takes no --p")).into())
        } else {
            Ok(())
        }
    };
    let no_q = || -> anyhow::Result<()> {
        if q.is_some() {
            Err(Error::validation(format!("model {name} takes no --q")).into())
        } else {
            Ok(())
        }
    };

    match name.as_str() {
        "nonresponse" => {
            no_d()?;
            no_p()?;
            no_q()?;
            Ok(ModelSpec::NonResponse)
        }
        "mixture" => {
            no_p()?;
            no_q()?;
            Ok(ModelSpec::Mixture { d: d.unwrap_or(1) })
        }
        "regression" => {
            no_q()?;
            let p = p.unwrap_or(1.0);
            if !(p.is_finite() && p >= 1.0 && p.fract() == 0.0 && p <= u32::MAX as f64) {
                return Err(Error::validation(format!(
                    "regression link power must be a positive integer, got {p}"
                ))
                .into());
            }
            Ok(ModelSpec::Regression { d: d.unwrap_or(1), p: p as u32 })
        }
        "polynomial" => {
            let eps_n = (n as f64).powf(-0.5);
            let spec = PolynomialSpec::new(p.unwrap_or(4.0), q.unwrap_or(2.0), eps_n, d.unwrap_or(1))?;
            Ok(ModelSpec::Polynomial(spec))
        }
        "counterexample" => {
            no_d()?;
            no_p()?;
            no_q()?;
            Ok(ModelSpec::Counterexample(CounterexampleSpec::new(n as u64)?))
        }
        other => Err(Error::validation(format!(
            "unknown model '{other}' (expected nonresponse, mixture, regression, polynomial or counterexample)"
        ))
        .into()),
    }
}

fn parse_algorithms(s: &str) -> anyhow::Result<Vec<Algorithm>> {
    let list: Vec<Algorithm> = s
        .split(',')
        .map(|piece| piece.trim().parse::<Algorithm>())
        .collect::<oplab::Result<_>>()?;
    if list.is_empty() {
        return Err(Error::validation("algorithm list is empty").into());
    }
    Ok(list)
}

fn parse_level(s: &str) -> anyhow::Result<Level> {
    match s {
        "population" => Ok(Level::Population),
        "sample" => Ok(Level::Sample),
        other => {
            Err(Error::validation(format!("unknown level '{other}' (expected population or sample)"))
                .into())
        }
    }
}

fn parse_init_rule(s: &str) -> anyhow::Result<InitRule> {
    if s == "default" {
        return Ok(InitRule::Default);
    }
    if let Some(rest) = s.strip_prefix("offset:") {
        return Ok(InitRule::Offset(parse_f64(rest, "offset radius")?));
    }
    if let Some(rest) = s.strip_prefix("annulus:") {
        let (r_in, r_out) = rest.split_once(':').ok_or_else(|| {
            Error::validation("annulus rule needs two radii, e.g. annulus:0.05:0.5")
        })?;
        return Ok(InitRule::Annulus {
            r_in: parse_f64(r_in, "annulus inner radius")?,
            r_out: parse_f64(r_out, "annulus outer radius")?,
        });
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        let coords: Vec<f64> = rest
            .split(',')
            .map(|v| parse_f64(v, "fixed coordinate"))
            .collect::<anyhow::Result<_>>()?;
        return Ok(InitRule::Fixed(coords));
    }
    Err(Error::validation(format!(
        "unknown init rule '{s}' (expected default, offset:R, annulus:RIN:ROUT or fixed:V1,V2,...)"
    ))
    .into())
}

fn parse_threshold_rule(s: &str) -> anyhow::Result<ThresholdRule> {
    if let Some(rest) = s.strip_prefix("absolute:") {
        return Ok(ThresholdRule::Absolute(parse_f64(rest, "absolute threshold")?));
    }
    if let Some(rest) = s.strip_prefix("power:") {
        let (c, a) = rest
            .split_once(':')
            .ok_or_else(|| Error::validation("power rule needs two values, e.g. power:3:0.25"))?;
        return Ok(ThresholdRule::PowerLaw {
            c: parse_f64(c, "threshold constant")?,
            a: parse_f64(a, "threshold exponent")?,
        });
    }
    Err(Error::validation(format!(
        "unknown threshold rule '{s}' (expected absolute:V or power:C:A)"
    ))
    .into())
}

fn parse_f64(s: &str, what: &str) -> anyhow::Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::validation(format!("{what}: cannot parse '{}': {e}", s.trim())).into())
}

fn parse_eps_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| parse_f64(v, "perturbation size"))
        .collect()
}

fn describe_class(class: &ConvergenceClass) -> String {
    match class.mode {
        RateMode::Fast { kappa_hat } => {
            format!("FAST kappa {:.4} (R2 {:.4})", kappa_hat, class.fit.r2)
        }
        RateMode::Slow { beta_hat } => {
            format!("SLOW beta {:.4} (R2 {:.4})", beta_hat, class.fit.r2)
        }
    }
}

fn writer(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_trace_csv(path: &Path, trace: &IterationTrace) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    let d = trace.entries()[0].point.dim();
    let coords: Vec<String> = (0..d).map(|j| format!("theta_{j}")).collect();
    writeln!(w, "t,error,{}", coords.join(",")).context("writing trace")?;
    for e in trace.entries() {
        let coords: Vec<String> = e.point.coords().iter().map(|c| format!("{c}")).collect();
        writeln!(w, "{},{},{}", e.t, e.error, coords.join(",")).context("writing trace")?;
    }
    Ok(())
}

pub fn gen_data(args: GenDataArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&["model", "d", "p", "q", "n", "seed", "out"])?;
    let n = cfg.require(args.n, "n")?;
    let seed = cfg.resolve_or(args.seed, "seed", 0)?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let model = build_model(&args.model, cfg, n)?;

    let (_, data) = materialize(&model, n, seed)?;
    let data = data.ok_or_else(|| {
        Error::validation(format!("model {} is deterministic and has no dataset", model.name()))
    })?;
    save_dataset(&data, &out)?;
    println!("wrote {} samples of {} (d={}) to {}", data.n(), model.name(), model.dim(), out.display());
    Ok(())
}

pub fn run(args: RunArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&[
        "model", "d", "p", "q", "algorithm", "level", "n", "seed", "data", "init", "iters",
        "threshold", "eta", "cubic-l", "trace-out", "plot-out",
    ])?;
    let n = cfg.resolve_or(args.n, "n", 10_000)?;
    let seed = cfg.resolve_or(args.seed, "seed", 0)?;
    let algorithm: Algorithm = cfg.require::<String>(args.algorithm, "algorithm")?.parse()?;
    let level = parse_level(&cfg.resolve_or(args.level, "level", "sample".into())?)?;
    let iters = cfg.resolve_or(args.iters, "iters", 200)?;
    let threshold = cfg.resolve(args.threshold, "threshold")?;
    let data_path: Option<PathBuf> = cfg.resolve(args.data, "data")?;
    let trace_out: Option<PathBuf> = cfg.resolve(args.trace_out, "trace-out")?;
    let plot_out: Option<PathBuf> = cfg.resolve(args.plot_out, "plot-out")?;
    let config = AlgorithmConfig {
        eta: cfg.resolve(args.eta, "eta")?,
        cubic_l: cfg.resolve(args.cubic_l, "cubic-l")?,
    };

    let base = build_model(&args.model, cfg, n)?;
    let (model, data) = match (level, &data_path) {
        (Level::Population, None) => (base, None),
        (Level::Population, Some(_)) => {
            return Err(
                Error::validation("a dataset only backs the sample level; drop --data").into()
            );
        }
        (Level::Sample, None) => materialize(&base, n, seed)?,
        (Level::Sample, Some(path)) => {
            let data = load_dataset(&base, path)?;
            (base, Some(data))
        }
    };
    let op = make_operator(&model, algorithm, level, data.as_ref(), &config)?;

    let init = cfg.resolve(args.init, "init")?.unwrap_or(match algorithm {
        Algorithm::Gd | Algorithm::Em => 0.5 * model.rho(),
        Algorithm::Newton | Algorithm::Cnm => (10.0 * (n as f64).powf(-0.25)).max(0.05),
    });
    let mut coords = vec![0.0; model.dim()];
    coords[0] = init;
    let theta0 = ParamPoint::new(coords)?;
    let target = ParamPoint::zero(model.dim());

    println!(
        "{} {} on {} {} (d={}), init {:.6}",
        algorithm,
        level.name(),
        model.name(),
        match data.as_ref() {
            Some(data) => format!("n={}", data.n()),
            None => format!("scale n={n}"),
        },
        model.dim(),
        init
    );
    let trace = match threshold {
        Some(tau) => {
            let (trace, hit) = iterate_until(&op, &theta0, &target, tau, iters)?;
            match hit {
                Some(t) => println!("threshold {tau:.3e} hit at iteration {t}"),
                None => println!("threshold {tau:.3e} not hit within {iters} iterations"),
            }
            trace
        }
        None => iterate(&op, &theta0, iters, &target)?,
    };
    let last = trace.final_entry();
    println!(
        "final error {:.6e} after {} iterations ({:?})",
        last.error,
        trace.len() - 1,
        trace.termination()
    );
    if let Ok(class) = classify_convergence(&trace) {
        println!("classification: {}", describe_class(&class));
    }

    if let Some(path) = trace_out {
        write_trace_csv(&path, &trace)?;
        println!("wrote trace to {}", path.display());
    }
    if let Some(path) = plot_out {
        let label = format!("{} ({})", algorithm, level.name());
        plot_traces(&[(label, trace.errors())], &path)?;
        println!("wrote plot to {}", path.display());
    }
    Ok(())
}

pub fn sweep(args: SweepArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&[
        "model", "d", "p", "q", "algorithms", "n-grid", "trials", "master-seed", "init",
        "threshold", "max-iters", "eta", "cubic-l", "out", "plot",
    ])?;
    let algorithms = parse_algorithms(&cfg.require::<String>(args.algorithms, "algorithms")?)?;
    let grid_raw: String = cfg.require(args.n_grid, "n-grid")?;
    let n_grid: Vec<usize> = grid_raw
        .split(',')
        .map(|v| {
            v.trim().parse::<usize>().map_err(|e| {
                Error::validation(format!("n-grid entry '{}': {e}", v.trim()))
            })
        })
        .collect::<oplab::Result<_>>()?;
    let trials = cfg.resolve_or(args.trials, "trials", 20)?;
    let master_seed = cfg.resolve_or(args.master_seed, "master-seed", 0)?;
    let init = parse_init_rule(&cfg.resolve_or(args.init, "init", "default".into())?)?;
    let threshold =
        parse_threshold_rule(&cfg.resolve_or(args.threshold, "threshold", "power:3:0.25".into())?)?;
    let max_iters = cfg.resolve_or(args.max_iters, "max-iters", 1000)?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let plot: Option<PathBuf> = cfg.resolve(args.plot, "plot")?;
    let algorithm_config = AlgorithmConfig {
        eta: cfg.resolve(args.eta, "eta")?,
        cubic_l: cfg.resolve(args.cubic_l, "cubic-l")?,
    };
    let scale_n = *n_grid.first().unwrap_or(&10_000);
    let model = build_model(&args.model, cfg, scale_n)?;

    let result = run_sweep(&SweepConfig {
        model,
        algorithms,
        n_grid,
        trials,
        master_seed,
        init,
        threshold,
        max_iters,
        algorithm_config,
    })?;

    for row in &result.summary {
        println!(
            "{} n={}: trials {}, failures {}, hits {}, median final error {}, median hit {}",
            row.algorithm,
            row.n,
            row.trials,
            row.failures,
            row.hits,
            row.median_final_error
                .map_or("n/a".into(), |v| format!("{v:.6e}")),
            row.median_hit_iteration
                .map_or("n/a".into(), |v| format!("{v:.1}")),
        );
    }
    emit_csv(&result, &out)?;
    println!(
        "wrote {} rows to {} (summary: {})",
        result.rows.len(),
        out.display(),
        summary_path(&out).display()
    );
    if let Some(path) = plot {
        emit_plot(&result, &path)?;
        println!("wrote plot to {}", path.display());
    }
    Ok(())
}

pub fn pop_rates(args: PopRatesArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&[
        "model", "d", "p", "q", "algorithms", "init", "iters", "n", "eta", "cubic-l", "out",
        "plot-out",
    ])?;
    let n = cfg.resolve_or(args.n, "n", 10_000)?;
    let algorithms = parse_algorithms(&cfg.require::<String>(args.algorithms, "algorithms")?)?;
    let init = cfg.resolve_or(args.init, "init", 0.9)?;
    let iters = cfg.resolve_or(args.iters, "iters", 500)?;
    let out: Option<PathBuf> = cfg.resolve(args.out, "out")?;
    let plot_out: Option<PathBuf> = cfg.resolve(args.plot_out, "plot-out")?;
    let config = AlgorithmConfig {
        eta: cfg.resolve(args.eta, "eta")?,
        cubic_l: cfg.resolve(args.cubic_l, "cubic-l")?,
    };
    let model = build_model(&args.model, cfg, n)?;

    let mut coords = vec![0.0; model.dim()];
    coords[0] = init;
    let theta0 = ParamPoint::new(coords)?;
    let rates = run_population_rates(&model, &algorithms, &config, &theta0, iters)?;

    for rate in &rates {
        let last = rate.trace.final_entry();
        println!(
            "{}: {}, final error {:.6e} after {} iterations",
            rate.algorithm,
            rate.class
                .as_ref()
                .map_or("at the fixed point, nothing to classify".into(), describe_class),
            last.error,
            rate.trace.len() - 1
        );
    }
    if let Some(path) = out {
        let mut w = writer(&path)?;
        writeln!(w, "algorithm,t,error").context("writing traces")?;
        for rate in &rates {
            for e in rate.trace.entries() {
                writeln!(w, "{},{},{}", rate.algorithm, e.t, e.error).context("writing traces")?;
            }
        }
        println!("wrote traces to {}", path.display());
    }
    if let Some(path) = plot_out {
        let series: Vec<(String, Vec<f64>)> = rates
            .iter()
            .map(|r| (r.algorithm.to_string(), r.trace.errors()))
            .collect();
        plot_traces(&series, &path)?;
        println!("wrote plot to {}", path.display());
    }
    Ok(())
}

pub fn stability(args: StabilityArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&[
        "model", "d", "p", "q", "algorithm", "n", "seed", "r-min", "r-max", "num-radii",
        "probes", "probe-seed", "eta", "cubic-l", "out", "plot-out",
    ])?;
    let n = cfg.resolve_or(args.n, "n", 10_000)?;
    let seed = cfg.resolve_or(args.seed, "seed", 0)?;
    let algorithm: Algorithm = cfg.require::<String>(args.algorithm, "algorithm")?.parse()?;
    let num_radii = cfg.resolve_or(args.num_radii, "num-radii", 12)?;
    let probes = cfg.resolve_or(args.probes, "probes", 16)?;
    let probe_seed = cfg.resolve_or(args.probe_seed, "probe-seed", 1)?;
    let out: Option<PathBuf> = cfg.resolve(args.out, "out")?;
    let plot_out: Option<PathBuf> = cfg.resolve(args.plot_out, "plot-out")?;
    let config = AlgorithmConfig {
        eta: cfg.resolve(args.eta, "eta")?,
        cubic_l: cfg.resolve(args.cubic_l, "cubic-l")?,
    };
    let base = build_model(&args.model, cfg, n)?;
    let r_min = cfg.resolve_or(args.r_min, "r-min", 0.05 * base.rho())?;
    let r_max = cfg.resolve_or(args.r_max, "r-max", 0.5 * base.rho())?;
    if !(r_min.is_finite() && r_max.is_finite() && 0.0 < r_min && r_min < r_max) {
        return Err(Error::validation(format!(
            "need 0 < r-min < r-max, got {r_min} and {r_max}"
        ))
        .into());
    }
    if num_radii < 2 {
        return Err(Error::validation("num-radii must be at least 2").into());
    }

    let (model, data) = materialize(&base, n, seed)?;
    let radii: Vec<f64> = (0..num_radii)
        .map(|k| r_min * (r_max / r_min).powf(k as f64 / (num_radii - 1) as f64))
        .collect();
    let profile =
        perturbation_profile(&model, algorithm, data.as_ref(), &config, &radii, probes, probe_seed)?;

    println!(
        "{} on {} (n={}): {} radii in [{:.4e}, {:.4e}], {} probes each",
        algorithm,
        model.name(),
        n,
        profile.radii().len(),
        r_min,
        r_max,
        profile.probe_count()
    );
    match profile.gamma_fit() {
        Some(fit) => {
            let (lo, hi) = profile.fit_range().expect("fitted profiles have a range");
            println!("gamma {:.4} (R2 {:.4}) over [{:.4e}, {:.4e}]", fit.slope, fit.r2, lo, hi);
        }
        None => println!("no trend fitted (fewer than 3 usable radii)"),
    }
    match profile.inner_radius() {
        Some(r) => println!("inner radius estimate {r:.4e}"),
        None => println!("no inner radius detected (profile does not decay)"),
    }
    if let Some(path) = out {
        let mut w = writer(&path)?;
        writeln!(w, "radius,sup,probes_ok,probe_count").context("writing profile")?;
        for ((r, s), ok) in profile
            .radii()
            .iter()
            .zip(profile.sups())
            .zip(profile.probes_ok())
        {
            writeln!(w, "{r},{s},{ok},{}", profile.probe_count()).context("writing profile")?;
        }
        println!("wrote profile to {}", path.display());
    }
    if let Some(path) = plot_out {
        plot_profile(&profile, &path)?;
        println!("wrote plot to {}", path.display());
    }
    Ok(())
}

pub fn epochs(args: EpochsArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&["beta", "gamma", "eps", "alpha", "c2"])?;
    let beta = cfg.require(args.beta, "beta")?;
    let gamma = cfg.require(args.gamma, "gamma")?;
    let eps = cfg.require(args.eps, "eps")?;
    let alpha = cfg.require(args.alpha, "alpha")?;
    let c2 = cfg.resolve_or(args.c2, "c2", 1.0)?;

    let schedule = epoch_schedule(beta, gamma, eps, alpha, c2)?;
    println!(
        "beta {beta}, gamma {gamma}, eps {eps:.3e}, alpha {alpha}: {} epochs, {} iterations total",
        schedule.num_epochs(),
        schedule.total_iterations()
    );
    println!(
        "lambda recursion: b {:.6}, b' {:.6}, limit nu* {:.6}",
        schedule.b(),
        schedule.b_prime(),
        schedule.nu_star()
    );
    println!("epoch,lambda,length,cumulative,phase_one,phase_two");
    for ell in 0..schedule.num_epochs() {
        println!(
            "{ell},{:.6},{},{},{:.6e},{:.6e}",
            schedule.lambdas()[ell],
            schedule.lengths()[ell],
            schedule.cumulative()[ell],
            schedule.phase_one()[ell],
            schedule.phase_two()[ell],
        );
    }
    Ok(())
}

pub fn prop4(args: Prop4Args, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&["p", "q", "eps"])?;
    let p = cfg.resolve_or(args.p, "p", 4.0)?;
    let q = cfg.resolve_or(args.q, "q", 2.0)?;
    let eps = parse_eps_list(&cfg.resolve_or(args.eps, "eps", "1e-3,1e-4,1e-5".into())?)?;

    let report = run_proposition4_suite(p, q, &eps)?;
    println!(
        "power-law pair (p={p}, q={q}), calibrated budget constants gd {:.3}, nm {:.3}, cnm {:.3}",
        report.constants.gd, report.constants.nm, report.constants.cnm
    );
    for e in &report.entries {
        println!(
            "{} eps {:.1e}: floor {:.4e} {}, hit {} within budget {}{} -> {}",
            e.algorithm,
            e.eps_n,
            e.floor,
            if e.floor_ok { "respected" } else { "VIOLATED" },
            e.hit_iteration
                .map_or("never".into(), |t| t.to_string()),
            e.budget,
            match e.early_check {
                Some(true) => ", early lower bound held",
                Some(false) => ", early lower bound FAILED",
                None => "",
            },
            if e.pass { "pass" } else { "FAIL" }
        );
    }
    println!("overall: {}", if report.all_pass() { "PASS" } else { "FAIL" });
    Ok(())
}

pub fn escape(args: EscapeArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&["n", "init-below", "annulus", "iters", "out", "plot-out"])?;
    let n = cfg.resolve_or(args.n, "n", 10_000)?;
    let iters = cfg.resolve_or(args.iters, "iters", 60)?;
    let annulus = cfg.resolve_or(args.annulus, "annulus", (n as f64).powf(-0.25))?;
    let out: Option<PathBuf> = cfg.resolve(args.out, "out")?;
    let plot_out: Option<PathBuf> = cfg.resolve(args.plot_out, "plot-out")?;

    let init_below = match cfg.resolve(args.init_below, "init-below")? {
        Some(v) => v,
        None => find_escaping_init(n, iters)?.ok_or_else(|| {
            anyhow::anyhow!("no escaping initialization found below the inner radius at n={n}")
        })?,
    };

    let report = run_escape_demo(n, init_below, annulus, iters)?;
    println!("inner radius {:.6e} at n={n}", report.inner_radius);
    let below_last = report.below.final_entry();
    println!(
        "below:   init {:.6e} -> final point {:.4} after {} iterations, escaped toward 2: {}",
        init_below,
        below_last.point.as_scalar(),
        report.below.len() - 1,
        if report.below_escaped { "yes" } else { "no" }
    );
    let worst = report.annulus.errors().iter().cloned().fold(0.0f64, f64::max);
    println!(
        "annulus: init {:.6e} -> max error {:.6e} over {} iterations, stayed in B(0, 0.5): {}",
        annulus,
        worst,
        report.annulus.len() - 1,
        if report.annulus_contained { "yes" } else { "no" }
    );
    if let Some(path) = out {
        let mut w = writer(&path)?;
        writeln!(w, "branch,t,theta,error").context("writing traces")?;
        for (branch, trace) in [("below", &report.below), ("annulus", &report.annulus)] {
            for e in trace.entries() {
                writeln!(w, "{branch},{},{},{}", e.t, e.point.as_scalar(), e.error)
                    .context("writing traces")?;
            }
        }
        println!("wrote traces to {}", path.display());
    }
    if let Some(path) = plot_out {
        let series = vec![
            ("below inner radius".to_string(), report.below.errors()),
            ("annulus scale".to_string(), report.annulus.errors()),
        ];
        plot_traces(&series, &path)?;
        println!("wrote plot to {}", path.display());
    }
    Ok(())
}

pub fn plot(args: PlotArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    cfg.check_keys(&["rows", "out"])?;
    let rows_path: PathBuf = cfg.require(args.rows, "rows")?;
    let out: PathBuf = cfg.require(args.out, "out")?;

    let rows = load_sweep_rows(&rows_path)?;
    let summary = summarize_rows(&rows);
    let algorithms = summary
        .iter()
        .map(|r| r.algorithm.to_string())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let sizes = summary.iter().map(|r| r.n).collect::<std::collections::BTreeSet<_>>().len();
    println!(
        "read {} rows ({algorithms} algorithms, {sizes} sample sizes) from {}",
        rows.len(),
        rows_path.display()
    );
    let result = SweepResult { rows, summary };
    emit_plot(&result, &out)?;
    println!("wrote plot to {}", out.display());
    Ok(())
}
