//! End-to-end checks of the `oplab` binary: argument/config resolution,
//! output files, and the documented exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn prop4_defaults_pass_and_exit_zero() {
    let out = oplab(&["prop4", "--eps", "1e-3,1e-4"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("overall: PASS"), "stdout: {text}");
    assert!(text.contains("gd eps 1.0e-3"));
}

#[test]
fn epochs_prints_schedule_table() {
    let out = oplab(&["epochs", "--beta", "1", "--gamma", "0.5", "--eps", "0.01", "--alpha", "0.001"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("epoch,lambda,length,cumulative,phase_one,phase_two"));
    assert!(text.contains("limit nu* 0.666667"));
}

#[test]
fn gen_data_and_run_round_trip_through_a_dataset_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mix.csv");
    let out = oplab(&[
        "gen-data", "--model", "mixture", "--n", "300", "--seed", "9",
        "--out", data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote 300 samples of mixture"));

    let trace = dir.path().join("trace.csv");
    let out = oplab(&[
        "run", "--model", "mixture", "--algorithm", "em",
        "--data", data.to_str().unwrap(), "--iters", "50",
        "--trace-out", trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("final error"));
    let trace_text = fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("t,error,theta_0"));
    assert_eq!(trace_text.lines().count(), 52, "50 steps plus init plus header");
}

#[test]
fn sweep_is_reproducible_and_feeds_the_plot_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let rows_a = dir.path().join("a.csv");
    let rows_b = dir.path().join("b.csv");
    let sweep_args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--model".into(), "mixture".into(),
            "--algorithms".into(), "em,nm".into(),
            "--n-grid".into(), "256,512".into(),
            "--trials".into(), "2".into(),
            "--master-seed".into(), "11".into(),
            "--max-iters".into(), "200".into(),
            "--out".into(), out.to_str().unwrap().into(),
        ]
    };
    let out = oplab(&sweep_args(&rows_a).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote 8 rows"));
    let out = oplab(&sweep_args(&rows_b).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(out.status.success());

    let bytes_a = fs::read(&rows_a).unwrap();
    assert_eq!(bytes_a, fs::read(&rows_b).unwrap(), "same master seed, same CSV bytes");
    assert!(rows_a.with_extension("summary.csv").exists());

    let fig = dir.path().join("fig.svg");
    let out = oplab(&["plot", "--rows", rows_a.to_str().unwrap(), "--out", fig.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("2 algorithms, 2 sample sizes"));
    let svg = fs::read_to_string(&fig).unwrap();
    assert!(svg.contains("<svg"));
    assert!(svg.contains("em"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("data.csv");
    let conf = dir.path().join("gen.conf");
    fs::write(
        &conf,
        format!(
            "# dataset defaults\nmodel = regression\nn = 40\nseed = 3\nout = {}\n",
            out_path.display()
        ),
    )
    .unwrap();

    let out = oplab(&["gen-data", "--config", conf.to_str().unwrap(), "--n", "25"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote 25 samples"), "flag overrides config");
    let lines = fs::read_to_string(&out_path).unwrap().lines().count();
    assert_eq!(lines, 26, "header plus 25 rows");
}

#[test]
fn escape_demo_reports_both_branches() {
    let out = oplab(&["escape", "--n", "10000", "--init-below", "0.0397", "--iters", "60"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("escaped toward 2: yes"), "stdout: {text}");
    assert!(text.contains("stayed in B(0, 0.5): yes"));
}

#[test]
fn validation_problems_exit_with_code_2() {
    // Unknown model name.
    let out = oplab(&["gen-data", "--model", "bogus", "--n", "10", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("unknown model"));

    // Missing required parameter.
    let out = oplab(&["gen-data", "--model", "mixture"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing required parameter `n`"));

    // Dataset request for a deterministic family.
    let out = oplab(&["gen-data", "--model", "polynomial", "--n", "100", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("deterministic"));

    // Config key the subcommand does not know.
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "trails = 3\n").unwrap();
    let out = oplab(&["prop4", "--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown config key `trails`"));

    // Unsupported (model, algorithm) pair.
    let out = oplab(&["run", "--model", "regression", "--algorithm", "em", "--n", "50"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn runtime_problems_exit_with_code_3() {
    let out = oplab(&["plot", "--rows", "/nonexistent/rows.csv", "--out", "/tmp/fig.svg"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}
