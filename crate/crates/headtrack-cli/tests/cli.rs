//! End-to-end tests of the `headtrack` binary: subcommand flows, exit
//! codes, and the config/environment plumbing.

use headtrack::noise::EstimatorProfile;
use headtrack::pose::EulerPose;
use headtrack::stream::write_error_pairs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_headtrack"))
}

fn simulate_benchmark(out: &Path) {
    let status = bin()
        .args([
            "simulate",
            "--benchmark",
            "--noise",
            "fsa-net-like",
            "--out",
        ])
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn filter_happy_path_prints_metrics_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bench.jsonl");
    let output = dir.path().join("filtered.jsonl");
    simulate_benchmark(&input);

    let result = bin()
        .args(["filter", "--in"])
        .arg(&input)
        .args(["--out"])
        .arg(&output)
        .output()
        .unwrap();
    assert!(result.status.success());
    assert!(output.exists());
    let metrics: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    assert_eq!(metrics["schema_version"], 1);
    assert_eq!(metrics["frames"], 1800);
    assert!(metrics["rmse"]["yaw"].as_f64().unwrap() > 0.0);
    assert!(metrics["jitter"]["pitch"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_input_file_is_a_data_error() {
    let result = bin()
        .args(["filter", "--in", "/definitely/not/here.jsonl"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("/definitely/not/here.jsonl"),
        "path missing from: {stderr}"
    );
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let result = bin().arg("frobnicate").output().unwrap();
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.to_lowercase().contains("usage"),
        "no usage in: {stderr}"
    );
}

#[test]
fn help_exits_zero() {
    let result = bin().arg("--help").output().unwrap();
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&result.stdout);
    for sub in ["simulate", "fit", "filter", "eval", "serve"] {
        assert!(stdout.contains(sub), "{sub} missing from help");
    }
}

/// Error CSV whose yaw errors follow a known Gaussian-with-offset curve and
/// whose pitch/roll errors are flat.
fn write_table_generated_errors(path: &Path) {
    let (lambda, mu, sigma, tau) = (4.11, -0.35, 30.87, 7.64);
    let density = |x: f64| {
        let d = (x - mu) / sigma;
        (-0.5 * d * d).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
    };
    let mut pairs = Vec::new();
    for i in 0..18 {
        let center = -85.0 + 10.0 * i as f64;
        let yaw_err = tau - lambda * density(center);
        for _ in 0..20 {
            let truth = EulerPose::new(center / 2.0, center, center / 3.0);
            let predicted = EulerPose::new(
                truth.pitch + 2.0, // flat pitch error
                truth.yaw + yaw_err,
                truth.roll + 1.0, // flat roll error
            );
            pairs.push((truth, predicted));
        }
    }
    write_error_pairs(path, &pairs).unwrap();
}

#[test]
fn fit_recovers_curve_and_exports_profile() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("errors.csv");
    let profile_path = dir.path().join("profile.toml");
    let report_path = dir.path().join("report.json");
    write_table_generated_errors(&csv);

    let result = bin()
        .args(["fit", "--in"])
        .arg(&csv)
        .args(["--axis", "yaw", "--out"])
        .arg(&profile_path)
        .args(["--report"])
        .arg(&report_path)
        .args(["--name", "bench-fit"])
        .output()
        .unwrap();
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let profile = EstimatorProfile::load(&profile_path).unwrap();
    assert_eq!(profile.name, "bench-fit");
    // Yaw was fitted: parameters within the recovery tolerance.
    assert!(
        (profile.yaw.lambda - 4.11).abs() / 4.11 < 0.01,
        "{}",
        profile.yaw.lambda
    );
    assert!((profile.yaw.sigma - 30.87).abs() / 30.87 < 0.01);
    assert!((profile.yaw.tau - 7.64).abs() / 7.64 < 0.01);
    // Pitch and roll were not selected: constant curves at the mean error.
    assert_eq!(profile.pitch.lambda, 0.0);
    assert!((profile.pitch.tau - 2.0).abs() < 1e-9);
    assert_eq!(profile.roll.lambda, 0.0);
    assert!((profile.roll.tau - 1.0).abs() < 1e-9);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["axes"].as_array().unwrap().len(), 3);
}

#[test]
fn eval_compares_two_streams() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let filtered = dir.path().join("filtered.jsonl");
    simulate_benchmark(&raw);
    let status = bin()
        .args(["filter", "--in"])
        .arg(&raw)
        .args(["--out"])
        .arg(&filtered)
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());

    let result = bin()
        .args(["eval", "--a"])
        .arg(&raw)
        .args(["--b"])
        .arg(&filtered)
        .args(["--json"])
        .output()
        .unwrap();
    assert!(result.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    let jitter_a = doc["a"]["jitter"]["yaw"].as_f64().unwrap();
    let jitter_b = doc["b"]["jitter"]["yaw"].as_f64().unwrap();
    assert!(jitter_b < jitter_a, "filtered stream should be smoother");
}

#[test]
fn config_comes_from_environment_when_not_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    // An invalid config must surface as a data error even via HPT_CONFIG.
    std::fs::write(
        &config_path,
        "[kalman]\nfixed_dt = -1.0\ndt_mode = \"fixed\"\n",
    )
    .unwrap();
    let input = dir.path().join("in.jsonl");
    std::fs::write(&input, "{\"t\":0.0,\"pitch\":0,\"yaw\":0,\"roll\":0}\n").unwrap();
    let result = bin()
        .env("HPT_CONFIG", &config_path)
        .args(["filter", "--in"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));

    // A valid one is picked up the same way.
    std::fs::write(
        &config_path,
        "[loop_closure]\nenabled = true\nkappa = [0.0, 0.0, 0.0]\n",
    )
    .unwrap();
    let result = bin()
        .env("HPT_CONFIG", &config_path)
        .args(["filter", "--in"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0));
    let metrics: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
    // Loop closure active means the settle field is populated.
    assert!(metrics["settle_time_s"].is_number());
}

#[test]
fn serve_round_trips_one_frame() {
    let mut child = bin()
        .args(["serve", "--listen", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let stdout = child.stdout.take().unwrap();
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on ")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();

    let stream = TcpStream::connect(&addr).unwrap();
    let mut writer = stream.try_clone().unwrap();
    writer
        .write_all(b"{\"t\":0.0,\"pitch\":1.0,\"yaw\":2.0,\"roll\":3.0}\n")
        .unwrap();
    writer.flush().unwrap();
    let mut reply = String::new();
    BufReader::new(stream).read_line(&mut reply).unwrap();
    let value: serde_json::Value = serde_json::from_str(&reply).unwrap();
    assert_eq!(value["pitch"], 1.0);
    assert_eq!(value["yaw"], 2.0);
    assert_eq!(value["roll"], 3.0);
    assert_eq!(value["vp"], 0.0);

    child.kill().unwrap();
    let _ = child.wait();
}
