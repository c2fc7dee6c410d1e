//! `oplab`: command-line driver for the fixed-point estimation laboratory.
//!
//! Every subcommand takes its parameters from flags, from a `key = value`
//! config file (`--config`), or both; flags win. Exit codes: 0 on success,
//! 2 when the request itself is invalid (bad flag value, malformed config,
//! unsupported model/algorithm pair), 3 when a valid request fails at run
//! time (I/O trouble, divergent or singular iterations).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "oplab", version, about = "Fixed-point estimation laboratory")]
struct Cli {
    /// Plain-text `key = value` defaults for the subcommand; flags override.
    #[arg(short, long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a statistical family and save it as CSV.
    GenData(GenDataArgs),
    /// Run one iteration trajectory and report where it lands.
    Run(RunArgs),
    /// Monte-Carlo sweep over sample sizes, trials, and algorithms.
    Sweep(SweepArgs),
    /// Iterate population operators and classify their convergence rates.
    PopRates(PopRatesArgs),
    /// Profile sample-vs-population operator deviation over probe radii.
    Stability(StabilityArgs),
    /// Print the epoch schedule for given rate and instability exponents.
    Epochs(EpochsArgs),
    /// Deterministic power-law suite: floors, budgets, and rate checks.
    Prop4(Prop4Args),
    /// Newton escape demo on the instability example.
    Escape(EscapeArgs),
    /// Render a sweep CSV into a static SVG figure.
    Plot(PlotArgs),
}

/// Model selection shared by the data-driven subcommands.
#[derive(Args, Clone)]
struct ModelArgs {
    /// Family: nonresponse, mixture, regression, polynomial, counterexample.
    #[arg(long)]
    model: Option<String>,
    /// Parameter dimension (mixture, regression, polynomial; default 1).
    #[arg(long)]
    d: Option<usize>,
    /// Exponent p: regression link power, or the power-law pair's p.
    #[arg(long)]
    p: Option<f64>,
    /// The power-law pair's q.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample size.
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Algorithm: gd, nm, cnm, or em.
    #[arg(long)]
    algorithm: Option<String>,
    /// Operator level: population or sample.
    #[arg(long)]
    level: Option<String>,
    /// Sample size (generates data for statistical families; sets the
    /// perturbation scale of deterministic ones).
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed for data generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Load the dataset from this CSV instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Initial offset along the first axis (defaults per algorithm).
    #[arg(long)]
    init: Option<f64>,
    /// Iteration budget.
    #[arg(long)]
    iters: Option<usize>,
    /// Stop at the first iterate with error at or below this value.
    #[arg(long)]
    threshold: Option<f64>,
    /// Gradient step size override.
    #[arg(long)]
    eta: Option<f64>,
    /// Cubic regularization weight override.
    #[arg(long)]
    cubic_l: Option<f64>,
    /// Write the trace (t, error, coordinates) to this CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write a semilog error plot to this SVG.
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated algorithms, e.g. gd,nm,cnm.
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated ascending sample sizes, e.g. 1024,2048,4096.
    #[arg(long)]
    n_grid: Option<String>,
    /// Trials per (algorithm, n) cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; per-cell seeds are derived from it.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Initialization rule: default, offset:R, annulus:RIN:ROUT, or
    /// fixed:V1,V2,...
    #[arg(long)]
    init: Option<String>,
    /// Threshold rule: absolute:V or power:C:A (threshold C·n^{-A}).
    #[arg(long)]
    threshold: Option<String>,
    /// Iteration budget per cell.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Gradient step size override.
    #[arg(long)]
    eta: Option<f64>,
    /// Cubic regularization weight override.
    #[arg(long)]
    cubic_l: Option<f64>,
    /// Output CSV for the raw rows; the per-(algorithm, n) summary lands
    /// next to it with a .summary.csv suffix.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the sweep figure to this SVG.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct PopRatesArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated algorithms, e.g. gd,nm,cnm.
    #[arg(long)]
    algorithms: Option<String>,
    /// Initial offset along the first axis.
    #[arg(long)]
    init: Option<f64>,
    /// Iterations per trace.
    #[arg(long)]
    iters: Option<usize>,
    /// Perturbation scale parameter for deterministic families.
    #[arg(long)]
    n: Option<usize>,
    /// Gradient step size override.
    #[arg(long)]
    eta: Option<f64>,
    /// Cubic regularization weight override.
    #[arg(long)]
    cubic_l: Option<f64>,
    /// Write the traces (algorithm, t, error) to this CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a semilog error plot to this SVG.
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Algorithm: gd, nm, cnm, or em.
    #[arg(long)]
    algorithm: Option<String>,
    /// Sample size behind the sample operator.
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed for data generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Smallest probe radius.
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest probe radius.
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of log-spaced radii.
    #[arg(long)]
    num_radii: Option<usize>,
    /// Probe directions per radius (d > 1; scalar models probe both signs).
    #[arg(long)]
    probes: Option<usize>,
    /// RNG seed for probe directions.
    #[arg(long)]
    probe_seed: Option<u64>,
    /// Gradient step size override.
    #[arg(long)]
    eta: Option<f64>,
    /// Cubic regularization weight override.
    #[arg(long)]
    cubic_l: Option<f64>,
    /// Write the profile (radius, sup, probes_ok) to this CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a log-log profile plot to this SVG.
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Args)]
struct EpochsArgs {
    /// Population convergence exponent β of the SLOW(β) rate.
    #[arg(long)]
    beta: Option<f64>,
    /// Perturbation growth exponent γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Perturbation amplitude ε at the fixed point.
    #[arg(long)]
    eps: Option<f64>,
    /// Initial error (localization starts at radius α).
    #[arg(long)]
    alpha: Option<f64>,
    /// Perturbation constant multiplier.
    #[arg(long)]
    c2: Option<f64>,
}

#[derive(Args)]
struct Prop4Args {
    /// Leading exponent p of the power-law pair (p > q+1).
    #[arg(long)]
    p: Option<f64>,
    /// Perturbation exponent q (q ≥ 2).
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated perturbation sizes, e.g. 1e-3,1e-4,1e-5.
    #[arg(long)]
    eps: Option<String>,
}

#[derive(Args)]
struct EscapeArgs {
    /// Sample size (sets the bump scale n^{-1/2}).
    #[arg(long)]
    n: Option<usize>,
    /// Initialization below the inner radius; searched for when omitted.
    #[arg(long)]
    init_below: Option<f64>,
    /// Initialization at the annulus scale (default n^{-1/4}).
    #[arg(long)]
    annulus: Option<f64>,
    /// Newton iterations per branch.
    #[arg(long)]
    iters: Option<usize>,
    /// Write both traces (branch, t, theta, error) to this CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a semilog error plot of both branches to this SVG.
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep rows CSV produced by the sweep subcommand.
    #[arg(long)]
    rows: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = FileConfig::load(cli.config.as_deref())
        .map_err(anyhow::Error::from)
        .and_then(|cfg| dispatch(cli.command, &cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err
                .downcast_ref::<oplab::error::Error>()
                .is_some_and(|e| e.is_validation());
            ExitCode::from(if validation { 2 } else { 3 })
        }
    }
}

fn dispatch(command: Command, cfg: &FileConfig) -> anyhow::Result<()> {
    match command {
        Command::GenData(args) => commands::gen_data(args, cfg),
        Command::Run(args) => commands::run(args, cfg),
        Command::Sweep(args) => commands::sweep(args, cfg),
        Command::PopRates(args) => commands::pop_rates(args, cfg),
        Command::Stability(args) => commands::stability(args, cfg),
        Command::Epochs(args) => commands::epochs(args, cfg),
        Command::Prop4(args) => commands::prop4(args, cfg),
        Command::Escape(args) => commands::escape(args, cfg),
        Command::Plot(args) => commands::plot(args, cfg),
    }
}
