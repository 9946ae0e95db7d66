//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tautline")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tautline-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write_noise_csv(path: &Path, n: usize, seed: u64) {
    let f = tautline::signal_values(tautline::SignalKind::Blocks, n).unwrap();
    let y = tautline::gen_noise(tautline::TestBed::Gaussian, &f, seed);
    let mut s = String::from("y\n");
    for v in &y {
        s.push_str(&format!("{v:.17}\n"));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn fit_then_verify_round_trip() {
    let dir = scratch("roundtrip");
    let input = dir.join("in.csv");
    write_noise_csv(&input, 128, 5);

    for method in ["mean", "quantile", "huber"] {
        let prefix = dir.join(format!("fit-{method}"));
        let lam_file = dir.join(format!("lam-{method}.csv"));
        let out = run(&[
            "fit",
            "--method",
            method,
            "--lambda",
            "3.0",
            input.to_str().unwrap(),
            "-o",
            prefix.to_str().unwrap(),
            "--lambda-out",
            lam_file.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{method}: {out:?}");

        let verify = run(&[
            "verify",
            "--data",
            input.to_str().unwrap(),
            "--fit",
            prefix.with_extension("csv").to_str().unwrap(),
            "--method",
            method,
            "--lambda-file",
            lam_file.to_str().unwrap(),
        ]);
        assert!(verify.status.success(), "{method} verify: {verify:?}");
        let text = String::from_utf8_lossy(&verify.stdout);
        assert!(text.contains("pass"), "{text}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn adaptive_fit_verifies_and_is_deterministic() {
    let dir = scratch("adaptive");
    let input = dir.join("in.csv");
    write_noise_csv(&input, 256, 9);

    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let prefix = dir.join(format!("fit-{tag}"));
        let out = run(&[
            "fit",
            "--method",
            "mean",
            "--adaptive",
            input.to_str().unwrap(),
            "-o",
            prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
        outputs.push((
            std::fs::read(prefix.with_extension("csv")).unwrap(),
            std::fs::read(prefix.with_extension("json")).unwrap(),
        ));
    }
    // byte-identical outputs for identical inputs
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1, outputs[1].1);

    let json = String::from_utf8_lossy(&outputs[0].1).to_string();
    assert!(json.contains("\"kind\": \"adaptive\""));
    assert!(json.contains("\"pass\": true"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn poisson_on_all_zero_counts_exits_with_model_error() {
    let dir = scratch("zeros");
    let input = dir.join("zeros.csv");
    std::fs::write(&input, "y\n0\n0\n0\n0\n").unwrap();
    let out = run(&[
        "fit",
        "--method",
        "poisson",
        "--adaptive",
        input.to_str().unwrap(),
        "-o",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("non-coercive"), "{err}");
    assert!(err.contains("zero"), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_csv_reports_row_and_column() {
    let dir = scratch("malformed");
    let input = dir.join("bad.csv");
    std::fs::write(&input, "x,y\n1,2\n2,oops\n").unwrap();
    let out = run(&[
        "fit",
        "--method",
        "mean",
        "--lambda",
        "1.0",
        input.to_str().unwrap(),
        "-o",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn duplicate_design_points_share_fitted_values() {
    let dir = scratch("ties");
    let input = dir.join("ties.csv");
    std::fs::write(
        &input,
        "x,y\n1,0.0\n2,1.0\n2,3.0\n3,10.0\n3,8.0\n4,2.0\n",
    )
    .unwrap();
    let prefix = dir.join("fit");
    let out = run(&[
        "fit",
        "--method",
        "mean",
        "--lambda",
        "0.7",
        input.to_str().unwrap(),
        "-o",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    // both observations at x = 2 (rows 1, 2) and x = 3 (rows 3, 4) share a value
    assert_eq!(rows[1][2], rows[2][2]);
    assert_eq!(rows[3][2], rows[4][2]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_defaults_with_flag_precedence() {
    let dir = scratch("config");
    let input = dir.join("in.csv");
    write_noise_csv(&input, 64, 3);
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "method=quantile\nbeta=0.9\nlambda=2.5\n").unwrap();

    // config supplies everything
    let out = run(&[
        "fit",
        input.to_str().unwrap(),
        "-o",
        dir.join("a").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let json = std::fs::read_to_string(dir.join("a.json")).unwrap();
    assert!(json.contains("beta=0.9"), "{json}");

    // explicit flag outranks the config value
    let out = run(&[
        "fit",
        "--beta",
        "0.1",
        input.to_str().unwrap(),
        "-o",
        dir.join("b").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let json = std::fs::read_to_string(dir.join("b.json")).unwrap();
    assert!(json.contains("beta=0.1"), "{json}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_writes_report() {
    let dir = scratch("simulate");
    let report = dir.join("report.csv");
    let out = run(&[
        "simulate",
        "--signals",
        "blocks",
        "--testbed",
        "gaussian",
        "--methods",
        "mean",
        "--n",
        "128",
        "--reps",
        "3",
        "--seed",
        "1",
        "-o",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("signal,testbed,method,n,reps,seed"));
    assert_eq!(text.lines().count(), 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn signal_export_has_expected_columns() {
    let dir = scratch("signal");
    let path = dir.join("sig.csv");
    let out = run(&[
        "signal",
        "--name",
        "doppler",
        "--n",
        "100",
        "--testbed",
        "cauchy",
        "--seed",
        "4",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "index,x,f_true,y");
    assert_eq!(text.lines().count(), 101);
    std::fs::remove_dir_all(&dir).ok();
}
