//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with
//! the measured quantities, then asserts. Tolerances are part of the
//! contract and are not to be loosened.

use oplab::algorithms::{make_operator, Algorithm, AlgorithmConfig};
use oplab::analysis::{fit_power_law, perturbation_profile, RateMode};
use oplab::epoch::epoch_schedule;
use oplab::experiments::{
    find_escaping_init, run_escape_demo, run_population_rates, run_proposition4_suite, run_sweep,
    InitRule, SweepConfig, SweepResult, ThresholdRule,
};
use oplab::models::{
    gen_mixture, gen_nonresponse, gen_regression, sample_mle, Dataset, Level, ModelSpec,
    PolynomialSpec,
};
use oplab::operator::Operator;
use oplab::point::ParamPoint;

fn report(criterion: usize, pass: bool, name: &str, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion} {status}: {name} ({detail})");
    assert!(pass, "criterion {criterion} failed: {name} ({detail})");
}

fn n_grid() -> Vec<usize> {
    (10..=16).map(|k| 1usize << k).collect()
}

fn sweep(
    model: ModelSpec,
    algorithm: Algorithm,
    init: f64,
    threshold_c: f64,
    n_grid: Vec<usize>,
    trials: usize,
    max_iters: usize,
    eta: Option<f64>,
) -> SweepResult {
    let d = model.dim();
    let mut coords = vec![0.0; d];
    coords[0] = init;
    run_sweep(&SweepConfig {
        model,
        algorithms: vec![algorithm],
        n_grid,
        trials,
        master_seed: 0xACCE97,
        init: InitRule::Fixed(coords),
        threshold: ThresholdRule::PowerLaw { c: threshold_c, a: 0.25 },
        max_iters,
        algorithm_config: AlgorithmConfig { eta, cubic_l: None },
    })
    .unwrap()
}

/// Median final errors and median hit iterations as (n, value) series.
fn medians(result: &SweepResult) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let mut errs = Vec::new();
    let mut hits = Vec::new();
    for row in &result.summary {
        if let Some(e) = row.median_final_error {
            errs.push((row.n as f64, e));
        }
        if let Some(h) = row.median_hit_iteration {
            hits.push((row.n as f64, h));
        }
    }
    (errs, hits)
}

fn loglog_slope(series: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
    fit_power_law(&xs, &ys).unwrap().slope
}

/// R-squared of the ordinary least-squares line y = a + b ln(x).
fn affine_in_log_r2(series: &[(f64, f64)]) -> f64 {
    let n = series.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in series {
        let lx = x.ln();
        sx += lx;
        sy += y;
        sxx += lx * lx;
        sxy += lx * y;
    }
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let a = (sy - b * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = series.iter().map(|&(_, y)| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = series
        .iter()
        .map(|&(x, y)| {
            let r = y - (a + b * x.ln());
            r * r
        })
        .sum();
    if ss_tot <= 0.0 {
        return if ss_res <= 1e-12 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

#[test]
fn criterion_1_deterministic_power_law_suite() {
    let report_res = run_proposition4_suite(4.0, 2.0, &[1e-3, 1e-4, 1e-5]).unwrap();
    let detail: Vec<String> = report_res
        .entries
        .iter()
        .map(|e| {
            format!(
                "{}@{:.0e}: floor_ok={} hit={:?}/{} early={:?}",
                e.algorithm, e.eps_n, e.floor_ok, e.hit_iteration, e.budget, e.early_check
            )
        })
        .collect();
    report(
        1,
        report_res.all_pass(),
        "power-law pair (4,2): floors, budgets and early lower bound",
        &detail.join("; "),
    );
}

#[test]
fn criterion_2_flat_regression_scaling_laws() {
    let model = ModelSpec::Regression { d: 1, p: 1 };
    let gd = sweep(model.clone(), Algorithm::Gd, 0.5, 1.0, n_grid(), 20, 1000, None);
    let nm = sweep(model.clone(), Algorithm::Newton, 0.9, 1.25, n_grid(), 20, 60, None);
    let cnm = sweep(model, Algorithm::Cnm, 0.9, 1.25, n_grid(), 20, 400, None);

    let (gd_err, gd_hit) = medians(&gd);
    let (nm_err, nm_hit) = medians(&nm);
    let (cnm_err, cnm_hit) = medians(&cnm);

    let gd_e = loglog_slope(&gd_err);
    let nm_e = loglog_slope(&nm_err);
    let cnm_e = loglog_slope(&cnm_err);
    let gd_h = loglog_slope(&gd_hit);
    let nm_h = loglog_slope(&nm_hit);
    let nm_r2 = affine_in_log_r2(&nm_hit);
    let cnm_h = loglog_slope(&cnm_hit);

    let errors_ok = [gd_e, nm_e, cnm_e].iter().all(|s| (-0.30..=-0.20).contains(s));
    let pass = errors_ok
        && (0.35..=0.55).contains(&gd_h)
        && nm_h <= 0.15
        && nm_r2 >= 0.8
        && (0.05..=0.30).contains(&cnm_h);
    report(
        2,
        pass,
        "flat regression: error n^{-1/4}, iterations sqrt(n)/log n/n^{1/6}",
        &format!(
            "err slopes gd {gd_e:.3} nm {nm_e:.3} cnm {cnm_e:.3}; hit slopes gd {gd_h:.3} nm {nm_h:.3} (R2 {nm_r2:.3}) cnm {cnm_h:.3}"
        ),
    );
}

#[test]
fn criterion_3_population_rates_and_perturbation_profiles() {
    let model = ModelSpec::Regression { d: 1, p: 1 };
    let theta0 = ParamPoint::scalar(0.9).unwrap();
    let config = AlgorithmConfig::default();
    let nm = &run_population_rates(&model, &[Algorithm::Newton], &config, &theta0, 60).unwrap()[0];
    let gd = &run_population_rates(&model, &[Algorithm::Gd], &config, &theta0, 8000).unwrap()[0];
    let cnm = &run_population_rates(&model, &[Algorithm::Cnm], &config, &theta0, 300).unwrap()[0];

    let nm_class = nm.class.as_ref().unwrap();
    let (nm_ok, kappa) = match nm_class.mode {
        RateMode::Fast { kappa_hat } => (
            (kappa_hat - 2.0 / 3.0).abs() <= 0.01 && nm_class.fit.r2 >= 0.99,
            kappa_hat,
        ),
        RateMode::Slow { beta_hat } => (false, beta_hat),
    };
    let gd_class = gd.class.as_ref().unwrap();
    let (gd_ok, beta_gd) = match gd_class.mode {
        RateMode::Slow { beta_hat } => ((beta_hat - 0.5).abs() <= 0.05, beta_hat),
        RateMode::Fast { kappa_hat } => (false, kappa_hat),
    };
    let cnm_class = cnm.class.as_ref().unwrap();
    let (cnm_ok, beta_cnm) = match cnm_class.mode {
        RateMode::Slow { beta_hat } => ((beta_hat - 2.0).abs() <= 0.2, beta_hat),
        RateMode::Fast { kappa_hat } => (false, kappa_hat),
    };

    // Perturbation profiles at n = 10^4 on the deterministic pair with
    // eps_n = n^{-1/2}; radii span [5 n^{-1/4}, 0.5].
    let poly = ModelSpec::Polynomial(PolynomialSpec::new(4.0, 2.0, 1e-4, 1).unwrap());
    let radii: Vec<f64> = (0..12)
        .map(|k| 0.05 * (0.5f64 / 0.05).powf(k as f64 / 11.0))
        .collect();
    let gd_prof = perturbation_profile(&poly, Algorithm::Gd, None, &config, &radii, 8, 5).unwrap();
    let nm_prof =
        perturbation_profile(&poly, Algorithm::Newton, None, &config, &radii, 8, 5).unwrap();
    let gd_gamma = gd_prof.gamma_fit().unwrap().slope;
    let nm_gamma = nm_prof.gamma_fit().unwrap().slope;
    let profiles_ok = (gd_gamma - 1.0).abs() <= 0.2 && (nm_gamma + 1.0).abs() <= 0.25;

    report(
        3,
        nm_ok && gd_ok && cnm_ok && profiles_ok,
        "population rates 2/3, 1/2, 2 and stability exponents +1/-1",
        &format!(
            "kappa {kappa:.4} (R2 {:.4}), beta_gd {beta_gd:.3}, beta_cnm {beta_cnm:.3}, gamma_gd {gd_gamma:.3}, gamma_nm {nm_gamma:.3}",
            nm_class.fit.r2
        ),
    );
}

#[test]
fn criterion_4_mixture_em_and_newton() {
    let model = ModelSpec::Mixture { d: 1 };
    let em = sweep(model.clone(), Algorithm::Em, 0.5, 1.0, n_grid(), 20, 1000, None);
    let nm = sweep(model, Algorithm::Newton, 0.9, 1.25, n_grid(), 20, 60, None);

    let (em_err, em_hit) = medians(&em);
    let (nm_err, nm_hit) = medians(&nm);
    let em_e = loglog_slope(&em_err);
    let em_h = loglog_slope(&em_hit);
    let nm_e = loglog_slope(&nm_err);
    let nm_h = loglog_slope(&nm_hit);
    let pass = (em_e + 0.25).abs() <= 0.05
        && (em_h - 0.5).abs() <= 0.15
        && (nm_e + 0.25).abs() <= 0.05
        && nm_h <= 0.15;
    report(
        4,
        pass,
        "over-specified mixture: EM sqrt(n) iterations, Newton log n",
        &format!("em err {em_e:.3} hit {em_h:.3}; nm err {nm_e:.3} hit {nm_h:.3}"),
    );
}

#[test]
fn criterion_5_nonresponse_ascent_and_newton() {
    let model = ModelSpec::NonResponse;
    let ga = sweep(model.clone(), Algorithm::Gd, 0.5, 1.0, n_grid(), 20, 1000, Some(2.0));
    let nm = sweep(model, Algorithm::Newton, 0.9, 1.25, n_grid(), 20, 60, None);

    let (ga_err, ga_hit) = medians(&ga);
    let (nm_err, nm_hit) = medians(&nm);
    let ga_e = loglog_slope(&ga_err);
    let ga_h = loglog_slope(&ga_hit);
    let nm_e = loglog_slope(&nm_err);
    let nm_h = loglog_slope(&nm_hit);
    let pass = (ga_e + 0.25).abs() <= 0.05
        && (ga_h - 0.5).abs() <= 0.15
        && (nm_e + 0.25).abs() <= 0.05
        && nm_h <= 0.15;
    report(
        5,
        pass,
        "informative non-response: ascent sqrt(n) iterations, Newton log n",
        &format!("ga err {ga_e:.3} hit {ga_h:.3}; nm err {nm_e:.3} hit {nm_h:.3}"),
    );
}

#[test]
fn criterion_6_two_dimensional_radius() {
    let grid: Vec<usize> = (11..=16).map(|k| 1usize << k).collect();
    let em = sweep(
        ModelSpec::Mixture { d: 2 },
        Algorithm::Em,
        0.5,
        1.5,
        grid.clone(),
        10,
        1000,
        None,
    );
    let gd = sweep(
        ModelSpec::Regression { d: 2, p: 1 },
        Algorithm::Gd,
        0.5,
        1.0,
        grid,
        10,
        1000,
        None,
    );
    let (em_err, _) = medians(&em);
    let (gd_err, _) = medians(&gd);
    let em_e = loglog_slope(&em_err);
    let gd_e = loglog_slope(&gd_err);
    let pass = (em_e + 0.25).abs() <= 0.06 && (gd_e + 0.25).abs() <= 0.06;
    report(
        6,
        pass,
        "two-dimensional statistical radius n^{-1/4}",
        &format!("mixture em err slope {em_e:.3}; regression gd err slope {gd_e:.3}"),
    );
}

/// Compact re-run of the invariant families; the full-strength versions
/// live in the invariants suite alongside this file.
#[test]
fn criterion_7_invariant_suites() {
    let mut failures: Vec<String> = Vec::new();

    // Finite differences on one objective per family.
    let data = Dataset::Regression(gen_regression(100, 1, 1, None, 3).unwrap());
    let obj =
        oplab::models::Objective::build(&ModelSpec::Regression { d: 1, p: 1 }, Level::Sample, Some(&data))
            .unwrap();
    for k in 1..=10 {
        let t = k as f64 * 0.04;
        let h = 1e-5;
        let e = obj.eval(&ParamPoint::scalar(t).unwrap()).unwrap();
        let vp = obj.eval(&ParamPoint::scalar(t + h).unwrap()).unwrap();
        let vm = obj.eval(&ParamPoint::scalar(t - h).unwrap()).unwrap();
        let g_fd = (vp.value - vm.value) / (2.0 * h);
        if (e.grad[0] - g_fd).abs() > 1e-5 * g_fd.abs().max(1.0) {
            failures.push(format!("finite differences at {t}"));
        }
        let h_fd = (vp.grad[0] - vm.grad[0]) / (2.0 * h);
        if (e.hess[0] - h_fd).abs() > 1e-5 * h_fd.abs().max(1.0) {
            failures.push(format!("hessian differences at {t}"));
        }
    }

    // Odd symmetry of a sample operator.
    let op = make_operator(
        &ModelSpec::Regression { d: 1, p: 1 },
        Algorithm::Newton,
        Level::Sample,
        Some(&data),
        &AlgorithmConfig::default(),
    )
    .unwrap();
    for k in 1..=50 {
        let t = k as f64 / 50.0;
        let fwd = op.apply(&ParamPoint::scalar(t).unwrap()).unwrap().as_scalar();
        let bwd = op.apply(&ParamPoint::scalar(-t).unwrap()).unwrap().as_scalar();
        if (fwd + bwd).abs() > 1e-12 * fwd.abs().max(1.0) {
            failures.push(format!("odd symmetry at {t}"));
        }
    }

    // Contraction certificates.
    let mix_nm = make_operator(
        &ModelSpec::Mixture { d: 1 },
        Algorithm::Newton,
        Level::Population,
        None,
        &AlgorithmConfig::default(),
    )
    .unwrap();
    let nr_nm = make_operator(
        &ModelSpec::NonResponse,
        Algorithm::Newton,
        Level::Population,
        None,
        &AlgorithmConfig::default(),
    )
    .unwrap();
    for k in 1..=50 {
        let t = k as f64 / 150.0;
        let next = mix_nm.apply(&ParamPoint::scalar(t).unwrap()).unwrap().as_scalar();
        if next.abs() > (7.0 / 9.0) * t * (1.0 + 1e-12) {
            failures.push(format!("mixture 7/9 certificate at {t}"));
        }
        let t = k as f64 / 100.0;
        let next = nr_nm.apply(&ParamPoint::scalar(t).unwrap()).unwrap().as_scalar();
        if next.abs() > 0.8 * t * (1.0 + 1e-12) {
            failures.push(format!("non-response 4/5 certificate at {t}"));
        }
    }

    // tanh inequality on a coarse deterministic grid.
    for k in -500..=500 {
        let x = k as f64 / 100.0;
        let lhs = x * x - x.powi(4) / 3.0;
        let mid = x * x.tanh();
        let rhs = lhs + 2.0 * x.powi(6) / 15.0;
        if !(lhs <= mid + 1e-12 && mid <= rhs + 1e-12) {
            failures.push(format!("tanh inequality at {x}"));
        }
    }

    // Cubic step against a brute-force model minimizer.
    let robj = oplab::models::Objective::build(
        &ModelSpec::Regression { d: 1, p: 1 },
        Level::Population,
        None,
    )
    .unwrap();
    for k in 1..=5 {
        let t = k as f64 / 5.0;
        let step = oplab::algorithms::cnm_step(&robj, &ParamPoint::scalar(t).unwrap(), 3.0)
            .unwrap()
            .as_scalar();
        let (g, h) = (6.0 * t * t * t, 18.0 * t * t);
        let m = |s: f64| g * s + 0.5 * h * s * s + 3.0 * s.abs().powi(3);
        let mut best = (f64::INFINITY, 0.0);
        for j in 0..=4_000_000 {
            let s = -2.0 + j as f64 * 1e-6;
            if m(s) < best.0 {
                best = (m(s), s);
            }
        }
        if (step - t - best.1).abs() > 1e-5 {
            failures.push(format!("cnm grid oracle at {t}"));
        }
    }

    // Sample MLE stationarity.
    for seed in 0..10u64 {
        let data = Dataset::Mixture(gen_mixture(80, 1, seed).unwrap());
        let model = ModelSpec::Mixture { d: 1 };
        let est = sample_mle(&model, &data).unwrap();
        let obj = oplab::models::Objective::build(&model, Level::Sample, Some(&data)).unwrap();
        if obj.eval(&est).unwrap().grad[0].abs() > 1e-9 {
            failures.push(format!("mle residual seed {seed}"));
        }
    }

    // Epoch lambdas against the closed form.
    for beta in [0.5, 1.0, 2.0] {
        for coupling in [0.0, 0.5, 1.0] {
            let gamma = coupling / beta;
            let s = epoch_schedule(beta, gamma, 0.01, 1e-3, 1.0).unwrap();
            let b = beta * gamma / (1.0 + beta);
            let nu = beta / (1.0 + beta - gamma * beta);
            for (ell, lambda) in s.lambdas().iter().enumerate() {
                if (lambda - nu * (1.0 - b.powi(ell as i32))).abs() > 1e-12 {
                    failures.push(format!("epoch closed form beta {beta} gamma {gamma}"));
                }
            }
        }
    }

    // Newton's monotone lower bound against the sample MLE.
    let mut tested = 0;
    let mut seed = 0;
    while tested < 5 && seed < 100 {
        seed += 1;
        let data = Dataset::NonResponse(gen_nonresponse(100, 0.0, seed).unwrap());
        let mle = sample_mle(&ModelSpec::NonResponse, &data).unwrap().as_scalar();
        if mle <= 1e-3 || mle >= 0.5 {
            continue;
        }
        tested += 1;
        let op = make_operator(
            &ModelSpec::NonResponse,
            Algorithm::Newton,
            Level::Sample,
            Some(&data),
            &AlgorithmConfig::default(),
        )
        .unwrap();
        for k in 0..=20 {
            let t = mle + (0.5 - mle) * k as f64 / 20.0;
            let next = op.apply(&ParamPoint::scalar(t).unwrap()).unwrap().as_scalar();
            if next < mle * (1.0 - 1e-9) {
                failures.push(format!("newton lower bound seed {seed} at {t}"));
            }
        }
    }

    report(
        7,
        failures.is_empty(),
        "invariant suites: derivatives, symmetry, certificates, oracles",
        &if failures.is_empty() {
            "all checks hold".to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_8_newton_escape_demo() {
    let n = 10_000;
    let below = find_escaping_init(n, 60).unwrap();
    let pass;
    let detail;
    match below {
        Some(init) => {
            let annulus = (n as f64).powf(-0.25);
            let demo = run_escape_demo(n, init, annulus, 60).unwrap();
            let again = run_escape_demo(n, init, annulus, 60).unwrap();
            let deterministic = demo.below.final_entry().point == again.below.final_entry().point;
            pass = demo.below_escaped && demo.annulus_contained && deterministic;
            detail = format!(
                "init {init:.6} -> final {:.4}; annulus {annulus:.2} max error {:.4}",
                demo.below.final_entry().point.as_scalar(),
                demo.annulus
                    .errors()
                    .iter()
                    .cloned()
                    .fold(0.0f64, f64::max)
            );
        }
        None => {
            pass = false;
            detail = "no escaping initialization found".to_string();
        }
    }
    report(
        8,
        pass,
        "sample Newton expelled toward 2 below the inner radius, local above it",
        &detail,
    );
}
