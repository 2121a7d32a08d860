//! End-to-end checks of the `cca` binary: generated files, exit codes,
//! and bitwise agreement between the command line and the library.

use cca_core::pipeline::{fit, FitConfig, Method, ModelKind};
use cca_core::{Matrix, ViewMatrix};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cca"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("cca-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Minimal reader for the "M,N"-headed dense CSV the binary writes.
fn read_csv(path: &Path) -> Matrix {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<usize> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let data: Vec<f64> = lines
        .flat_map(|l| l.split(','))
        .map(|s| s.parse().unwrap())
        .collect();
    Matrix::from_shape_vec((header[0], header[1]), data).unwrap()
}

fn synth_small(dir: &Path, seed: &str) -> Output {
    run(&[
        "synth", "--model", "dcca", "--mode", "dirichlet", "--m1", "5", "--m2", "5", "--K", "2",
        "--K1", "4", "--K2", "4", "--c", "0.3", "--ls", "100", "--ln", "100", "--N", "400",
        "--seed", seed, "--out", dir.to_str().unwrap(),
    ])
}

#[test]
fn synth_fixed2d_writes_known_factors() {
    let dir = tmp_dir("synth2d");
    let out = run(&[
        "synth", "--mode", "fixed2d", "--m1", "2", "--m2", "2", "--K", "1", "--K1", "2", "--K2",
        "2", "--c", "0.1", "--c1", "0.1", "--c2", "0.1", "--ls", "100", "--ln", "100", "--N",
        "50", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let d1 = read_csv(&dir.join("d1.csv"));
    assert_eq!(d1, ndarray::array![[0.5], [0.5]]);
    let f1 = read_csv(&dir.join("f1.csv"));
    assert_eq!(f1, ndarray::array![[0.9, 0.1], [0.1, 0.9]]);
    let x1 = read_csv(&dir.join("x1.csv"));
    assert_eq!(x1.dim(), (2, 50));
    assert!(x1.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
}

#[test]
fn synth_same_seed_is_byte_identical() {
    let d1 = tmp_dir("seed-a");
    let d2 = tmp_dir("seed-b");
    assert_success(&synth_small(&d1, "42"));
    assert_success(&synth_small(&d2, "42"));
    for name in ["x1.csv", "x2.csv", "d1.csv", "d2.csv"] {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across identical seeds");
    }
    let d3 = tmp_dir("seed-c");
    assert_success(&synth_small(&d3, "43"));
    let a = std::fs::read(d1.join("x1.csv")).unwrap();
    let c = std::fs::read(d3.join("x1.csv")).unwrap();
    assert_ne!(a, c, "different seeds produced identical data");
}

#[test]
fn fit_matches_library_bitwise() {
    let data = tmp_dir("fit-data");
    assert_success(&synth_small(&data, "3"));
    let out_dir = tmp_dir("fit-out");
    let out = run(&[
        "fit", "--x1", data.join("x1.csv").to_str().unwrap(), "--x2",
        data.join("x2.csv").to_str().unwrap(), "--model", "dcca", "--method", "gencov", "--K",
        "2", "--seed", "9", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let cli_d1 = read_csv(&out_dir.join("d1_hat.csv"));
    let cli_d2 = read_csv(&out_dir.join("d2_hat.csv"));

    let x1 = ViewMatrix::Dense(read_csv(&data.join("x1.csv")));
    let x2 = ViewMatrix::Dense(read_csv(&data.join("x2.csv")));
    let mut config = FitConfig::new(ModelKind::Dcca, Method::Gencov, 2);
    config.seed = 9;
    let result = fit(&x1, &x2, &config).unwrap();
    assert_eq!(result.loadings.d1, cli_d1);
    assert_eq!(result.loadings.d2, cli_d2);

    let diag = std::fs::read_to_string(out_dir.join("diagnostics.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&diag).unwrap();
    assert!(parsed["whitening_identity_err"].as_f64().unwrap() < 1e-8);
}

#[test]
fn validation_failures_exit_one() {
    let missing = run(&[
        "fit", "--x1", "/nonexistent/a.csv", "--x2", "/nonexistent/b.csv", "--model", "dcca",
        "--K", "2", "--out", "/tmp/unused",
    ]);
    assert_eq!(missing.status.code(), Some(1));

    let bad_mode = run(&[
        "synth", "--mode", "fixed2d", "--m1", "5", "--m2", "5", "--K", "2", "--out",
        tmp_dir("bad-mode").to_str().unwrap(),
    ]);
    assert_eq!(bad_mode.status.code(), Some(1));

    let zero_trials = run(&["experiment", "--trials", "0", "--out", "/tmp/unused"]);
    assert_eq!(zero_trials.status.code(), Some(1));

    let bad_flag = run(&["fit", "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(1));
}

#[test]
fn experiment_single_cell_and_delta_grid() {
    let dir = tmp_dir("exp");
    let out = run(&[
        "experiment", "--model", "dcca", "--method", "gencov", "--m1", "4", "--m2", "4", "--K",
        "2", "--K1", "3", "--K2", "3", "--ls", "50", "--ln", "50", "--n-grid", "300", "--trials",
        "1", "--delta", "0.05,0.1", "--seed", "5", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let results = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "method,delta,N,trial,err1,runtime_s,sweeps,final_off,dropped,status");
    assert_eq!(lines.len(), 1 + 2, "one row per delta expected:\n{results}");
    assert!(lines[1].starts_with("gencov,0.05,300,0,"));
    assert!(lines[2].starts_with("gencov,0.1,300,0,"));
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
}

#[test]
fn experiment_config_file_with_overrides() {
    let dir = tmp_dir("exp-cfg");
    let cfg_path = dir.join("sweep.cfg");
    std::fs::write(
        &cfg_path,
        "model = dcca\nmethods = gencov\nm1 = 4\nm2 = 4\nk = 2\nk1 = 3\nk2 = 3\n\
         ls = 50\nln = 50\nn_grid = 200,300\ntrials = 2\nseed = 11\n",
    )
    .unwrap();
    let out = run(&[
        "experiment", "--config", cfg_path.to_str().unwrap(), "--trials", "1", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let results = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    // 2 grid points x 1 trial after the flag override.
    assert_eq!(results.lines().count(), 1 + 2);
}

#[test]
fn eval_perfect_match_is_zero() {
    let dir = tmp_dir("eval");
    assert_success(&synth_small(&dir, "8"));
    let d1 = dir.join("d1.csv");
    let d2 = dir.join("d2.csv");
    let out = run(&[
        "eval", "--d1-hat", d1.to_str().unwrap(), "--d2-hat", d2.to_str().unwrap(), "--d1",
        d1.to_str().unwrap(), "--d2", d2.to_str().unwrap(),
    ]);
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("eval should print JSON");
    assert_eq!(report["err1"].as_f64().unwrap(), 0.0);
}

#[test]
fn ingest_reports_shapes_and_rejects_misaligned() {
    let dir = tmp_dir("ingest");
    assert_success(&synth_small(&dir, "2"));
    let out = run(&[
        "ingest", "--x1", dir.join("x1.csv").to_str().unwrap(), "--x2",
        dir.join("x2.csv").to_str().unwrap(),
    ]);
    assert_success(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["m1"].as_u64(), Some(5));
    assert_eq!(report["N"].as_u64(), Some(400));

    let trip = dir.join("short.txt");
    std::fs::write(&trip, "1 1 2\n").unwrap();
    let bad = run(&[
        "ingest", "--x1", dir.join("x1.csv").to_str().unwrap(), "--x2", trip.to_str().unwrap(),
        "--format", "docword-triplets",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}
