//! End-to-end checks of the command-line binary: output-file contracts,
//! byte determinism, embedded-header round trips, exit codes, and the
//! environment-variable configuration fallback.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_heliobubble"));
    // the fallback variable must never leak into tests that don't set it
    cmd.env_remove("HELIOBUBBLE_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary launches")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parse {path:?}: {e}"))
}

/// Data rows of a CSV written by the binary (comment lines stripped).
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text
        .lines()
        .find(|l| l.trim_start().starts_with('{'))
        .unwrap_or_else(|| panic!("no JSON error line in stderr: {text}"));
    serde_json::from_str(line).expect("stderr carries one JSON object")
}

#[test]
fn scan_writes_the_requested_grid_and_fit_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("scan");
    run_ok(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "scan",
        "--pmin",
        "0",
        "--pmax",
        "24",
        "--steps",
        "13",
    ]);

    let rows = csv_rows(&out_dir.join("scan.csv"));
    assert_eq!(rows.len(), 13, "one row per requested pressure");
    assert!(rows.iter().all(|r| r.len() == 6), "p, three lines, two radii");
    let first: f64 = rows[0][0].parse().unwrap();
    let last: f64 = rows[12][0].parse().unwrap();
    assert_eq!(first, 0.0);
    assert_eq!(last, 24.0);

    let fit = read_json(&out_dir.join("scan_fit.json"));
    assert_eq!(fit["failures"].as_array().unwrap().len(), 0);
    for series in fit["lines"].as_array().unwrap() {
        let line_fit = &series["fit"];
        assert!(line_fit["r_squared"].as_f64().unwrap() > 0.99);
        assert!(line_fit["slope_nm_per_bar"].as_f64().unwrap() < 0.0);
        assert_eq!(series["samples"].as_array().unwrap().len(), 13);
    }
    assert!(out_dir.join("scan_plot.py").exists(), "plot ships as a script");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "11",
        "scan",
        "--pmax",
        "10",
        "--steps",
        "3",
    ];
    run_ok(&args);
    let csv_once = fs::read(out_dir.join("scan.csv")).unwrap();
    let json_once = fs::read(out_dir.join("scan_fit.json")).unwrap();

    run_ok(&args);
    assert_eq!(fs::read(out_dir.join("scan.csv")).unwrap(), csv_once);
    assert_eq!(fs::read(out_dir.join("scan_fit.json")).unwrap(), json_once);
}

#[test]
fn embedded_header_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "scan",
        "--pmin",
        "2",
        "--pmax",
        "12",
        "--steps",
        "4",
    ]);
    let original = fs::read_to_string(out_dir.join("scan.csv")).unwrap();

    // the header alone must regenerate the identical file
    let config_text: String = original
        .lines()
        .filter_map(|l| l.strip_prefix("# config: "))
        .map(|l| format!("{l}\n"))
        .collect();
    assert!(config_text.contains("p_steps = 4"), "flags fold into the header");
    let config_path = dir.path().join("recovered.conf");
    fs::write(&config_path, config_text).unwrap();

    fs::remove_dir_all(&out_dir).unwrap();
    run_ok(&["--config", config_path.to_str().unwrap(), "scan"]);
    let regenerated = fs::read_to_string(out_dir.join("scan.csv")).unwrap();
    assert_eq!(regenerated, original);
}

#[test]
fn noiseless_synthesis_fits_back_to_its_own_centers() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "synth",
        "--pressure",
        "5",
        "--noise-fraction",
        "0",
    ]);
    let dat = out_dir.join("spectrum_00.dat");
    let text = fs::read_to_string(&dat).unwrap();
    let mut expected = Vec::new();
    for i in 0..3 {
        let tag = format!("# synthesized_P{i} = ");
        let line = text
            .lines()
            .find(|l| l.starts_with(&tag))
            .unwrap_or_else(|| panic!("{tag} missing"));
        let center: f64 = line
            .split_whitespace()
            .skip_while(|w| *w != "center_nm")
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        expected.push(center);
    }

    run_ok(&["--out-dir", out_dir.to_str().unwrap(), "fit-spectrum", dat.to_str().unwrap()]);
    let fit = read_json(&out_dir.join("spectrum_00_fit.json"));
    let lines = fit["fit"]["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 3);
    for (i, line) in lines.iter().enumerate() {
        let center = line["center_nm"].as_f64().unwrap();
        assert!(
            (center - expected[i]).abs() < 1e-6,
            "line {i}: fitted {center} vs synthesized {}",
            expected[i]
        );
    }
    assert!(out_dir.join("spectrum_00_residuals.csv").exists());
    assert!(out_dir.join("spectrum_00_plot.py").exists());
}

#[test]
fn slopes_pipeline_recovers_the_laid_down_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "20000",
        "synth",
        "--pressure",
        "1.5",
        "--pressure",
        "8",
        "--pressure",
        "16",
        "--pressure",
        "24",
        "--noise-fraction",
        "0.01",
    ]);
    let files: Vec<String> = (0..4)
        .map(|i| out_dir.join(format!("spectrum_{i:02}.dat")).to_str().unwrap().to_string())
        .collect();
    let mut args = vec!["--out-dir", out_dir.to_str().unwrap(), "slopes"];
    args.extend(files.iter().map(String::as_str));
    run_ok(&args);

    let slopes = read_json(&out_dir.join("slopes.json"));
    let printed = [-0.09, -0.06, -0.06];
    for (i, series) in slopes["lines"].as_array().unwrap().iter().enumerate() {
        let slope = series["fit"]["slope_nm_per_bar"].as_f64().unwrap();
        assert!(
            (slope - printed[i]).abs() < 0.01,
            "line {i}: recovered {slope} vs laid down {}",
            printed[i]
        );
    }
    assert!(slopes["combination"]["weighted_mean_slope_nm_per_bar"].is_number());
    assert!(out_dir.join("line_series.csv").exists());
    assert!(out_dir.join("slopes_plot.py").exists());
}

#[test]
fn table_lists_the_magnesium_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&["--out-dir", out_dir.to_str().unwrap(), "table"]);
    let rows = csv_rows(&out_dir.join("table.csv"));
    let mg: Vec<_> = rows.iter().filter(|r| r[0] == "Mg").collect();
    assert_eq!(mg.len(), 3);
    let slopes: Vec<f64> = mg.iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(slopes, vec![-0.09, -0.06, -0.06]);
    let centers: Vec<f64> = mg.iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(centers, vec![517.11, 517.51, 518.52]);
}

#[test]
fn empty_config_runs_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("empty.conf");
    fs::write(&config_path, "").unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "--config",
        config_path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "lines",
        "--pressure",
        "0",
    ]);
    let lines = read_json(&out_dir.join("lines.json"));
    let config = &lines["config"];
    assert_eq!(config["alpha"].as_str().unwrap(), "1.18");
    assert_eq!(config["rho0_g_cm3"].as_str().unwrap(), "0.146");
    assert!(config["v_s"].as_str().unwrap().starts_with("morse "));
}

#[test]
fn misspelled_keys_are_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("typo.conf");
    fs::write(&config_path, "sigm_j_m2 = 3.5e-4\n").unwrap();
    let out = run(&["--config", config_path.to_str().unwrap(), "table"]);
    assert_eq!(out.status.code(), Some(2), "invalid configuration exits 2");
    let err = stderr_error(&out);
    assert!(
        err["error"]["message"].as_str().unwrap().contains("sigm_j_m2"),
        "rejection names the offending key: {err}"
    );
}

#[test]
fn out_of_range_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.conf");
    fs::write(&config_path, "p_max_bar = 40\n").unwrap();
    let out = run(&["--config", config_path.to_str().unwrap(), "table"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_error(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("p_max_bar"));
}

#[test]
fn computation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "fit-spectrum",
        dir.path().join("does_not_exist.dat").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "runtime failures exit 1");
    let err = stderr_error(&out);
    assert_eq!(err["error"]["kind"].as_str().unwrap(), "computation");
}

#[test]
fn environment_variable_supplies_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("env.conf");
    fs::write(&config_path, "seed = 77\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .env("HELIOBUBBLE_CONFIG", &config_path)
        .args(["--out-dir", out_dir.to_str().unwrap(), "table"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = fs::read_to_string(out_dir.join("table.csv")).unwrap();
    assert!(table.contains("# config: seed = 77"));

    // an explicit --config beats the environment
    let override_path = dir.path().join("explicit.conf");
    fs::write(&override_path, "seed = 5\n").unwrap();
    let out = bin()
        .env("HELIOBUBBLE_CONFIG", &config_path)
        .args([
            "--config",
            override_path.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "table",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = fs::read_to_string(out_dir.join("table.csv")).unwrap();
    assert!(table.contains("# config: seed = 5"));
}
