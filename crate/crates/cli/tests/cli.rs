use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oetransduce"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("--out-dir").arg(dir).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const FIG2: &str = r#"{
  "schema_version": "1",
  "n_sites": 200,
  "profile": {"kind": "Tanh", "g_bar1": 0.08, "g_bar2": 0.08, "beta": 4.5},
  "kappa1_profile": 1.0,
  "kappa2_profile": 1.0
}"#;

#[test]
fn version_reports_tool_and_schema() {
    let out = bin().arg("--version").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("schema 1"), "{text}");
}

#[test]
fn spectrum_rows_bandwidth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIG2);
    let out = run(dir.path(), &["spectrum", "--config", &cfg, "--omega-max", "2", "--points", "4001"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega,re_t21,im_t21,abs2_t21,phase_unwrapped");
    assert_eq!(lines.len(), 4002);
    assert!(!csv.contains('\r'));
    assert!(lines[1].starts_with("-2.00000000000e0,"));

    let bw = read_json(&dir.path().join("spectrum.bandwidth.json"));
    assert!(bw["fwhm"].as_f64().unwrap() > 1.0);

    let manifest = read_json(&dir.path().join("spectrum.manifest.json"));
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["schema_version"], "1");
    assert_eq!(manifest["config"]["grid"]["n_points"], 4001);
    assert_eq!(manifest["config"]["grid"]["omega_min"], -2.0);
    assert_eq!(manifest["outputs"], serde_json::json!(["spectrum.csv", "spectrum.bandwidth.json"]));
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn csv_is_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["noise", "--n", "12", "--gamma", "1e-4", "--n-bar", "50", "--points", "801"];
    let one = bin().args(["--threads", "1"]).args(args).arg("--out-dir").arg(a.path()).output().unwrap();
    let many = bin().args(["--threads", "4"]).args(args).arg("--out-dir").arg(b.path()).output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(code(&many), 0);
    let x = std::fs::read(a.path().join("noise.csv")).unwrap();
    let y = std::fs::read(b.path().join("noise.csv")).unwrap();
    assert_eq!(x, y);

    let opt = ["optimize", "--n", "4", "--gamma-total", "0.02", "--min-eff", "0.95", "--seed", "9", "--starts", "10"];
    let one = bin().args(["--threads", "1"]).args(opt).arg("--out-dir").arg(a.path()).output().unwrap();
    let many = bin().args(["--threads", "3"]).args(opt).arg("--out-dir").arg(b.path()).output().unwrap();
    assert_eq!(one.stdout.split(|&c| c == b'\n').next(), many.stdout.split(|&c| c == b'\n').next());
    assert_eq!(read_json(&a.path().join("optimize.manifest.json"))["seed"], 9);
}

#[test]
fn malformed_json_is_a_config_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"schema_version\": \"1\",\n  \"n_sites\": ,\n}");
    let out = run(dir.path(), &["spectrum", "--config", &cfg]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3 column"), "{err}");
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bodies = [
        r#"{"schema_version": "7", "n_sites": 3, "profile": {"kind": "linear", "g_bar1": 0.1, "g_bar2": 0.1}}"#,
        r#"{"schema_version": "1", "n_sites": 0, "profile": {"kind": "linear", "g_bar1": 0.1, "g_bar2": 0.1}}"#,
        r#"{"schema_version": "1", "n_sites": 3, "profile": {"kind": "explicit", "values": [[0.1, 0.1]]}}"#,
        r#"{"schema_version": "1", "n_sites": 3, "profile": {"kind": "linear", "g_bar1": 0.1, "g_bar2": 0.1}, "n_bar": -1}"#,
        r#"{"schema_version": "1", "n_sites": 3, "profile": {"kind": "linear", "g_bar1": 0.1, "g_bar2": 0.1}, "gird": {}}"#,
    ];
    for body in bodies {
        let cfg = write_config(dir.path(), body);
        let out = run(dir.path(), &["spectrum", "--config", &cfg]);
        assert_eq!(code(&out), 2, "{body}");
    }
    let missing = run(dir.path(), &["spectrum", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&missing), 2);
    assert_eq!(code(&run(dir.path(), &["spectrum", "--points", "1"])), 2);
    assert_eq!(code(&run(dir.path(), &["stokes"])), 2);
    assert_eq!(code(&run(dir.path(), &["loss", "--parameter", "friction", "--values", "0.1"])), 2);
    assert_eq!(code(&run(dir.path(), &["optimize", "--n", "3"])), 2);
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["loss", "--parameter", "backscatter", "--values", "1", "--omega-min", "-0.1", "--omega-max", "0.1", "--points", "3"];
    let out = run(dir.path(), &args);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bandwidth_scan_single_size_and_asymmetric_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FIG2);
    let out = run(dir.path(), &["bandwidth-scan", "--config", &cfg, "--n-min", "6", "--n-max", "6"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("bandwidth-scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, vec!["n,fwhm_numeric,fwhm_eq4,fwhm_linear_fit", lines[1]]);
    assert!(lines[1].starts_with("6,"));

    let out = run(dir.path(), &["bandwidth-scan", "--config", &cfg, "--n-min", "1", "--n-max", "8", "--asymmetric"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("bandwidth-scan.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        assert_eq!(r.len(), 5);
        assert!(r[4] < r[1], "wider optical cavity narrows the band");
    }
    assert_eq!(code(&run(dir.path(), &["bandwidth-scan", "--n-min", "5", "--n-max", "4"])), 2);
}

#[test]
fn optimize_two_sites() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["optimize", "--n", "2", "--gamma-total", "0.05", "--min-eff", "0.99"]);
    assert_eq!(code(&out), 0);
    let v = read_json(&dir.path().join("optimize.json"));
    let g1 = v["gamma1"][0].as_f64().unwrap();
    assert!((g1 - 0.008).abs() < 0.001, "{g1}");
    assert!(v["passband_min"].as_f64().unwrap() >= 0.99 - 1e-9);
    for key in ["n", "gamma_total", "min_efficiency", "bandwidth", "beta_fit"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let manifest = read_json(&dir.path().join("optimize.manifest.json"));
    assert_eq!(manifest["config"]["optimize"]["n_sites"], 2);
}

#[test]
fn optimize_reports_fitted_steepness() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["optimize", "--n", "6", "--gamma-total", "0.02", "--min-eff", "0.95"]);
    assert_eq!(code(&out), 0);
    let beta = read_json(&dir.path().join("optimize.json"))["beta_fit"].as_f64().unwrap();
    assert!((3.0..6.0).contains(&beta), "{beta}");
}

#[test]
fn infeasible_optimization_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["optimize", "--n", "2", "--gamma-total", "0.05", "--min-eff", "1.0"]);
    assert_eq!(code(&out), 4);
    assert_eq!(read_json(&dir.path().join("optimize.json"))["converged"], false);
    assert!(dir.path().join("optimize.manifest.json").exists());
}

#[test]
fn backscatter_alpha_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["backscatter", "--ratios", "0.02,0.05,0.1,0.15,0.2", "--n", "10", "--fit-alpha"]);
    assert_eq!(code(&out), 0);
    let fit = read_json(&dir.path().join("backscatter.alpha.json"));
    let alpha = fit["alpha"].as_f64().unwrap();
    assert!((1.4..=1.8).contains(&alpha), "{alpha}");
    assert_eq!(fit["points_used"], 5);
    assert!(fit["stderr"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("backscatter.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 3000);
}

#[test]
fn noiseless_bath_gives_zero_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["noise", "--n", "8", "--gamma", "0", "--n-bar", "0", "--points", "101"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("noise.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("omega,s_add_port1,s_add_port2"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((v[1], v[2]), (0.0, 0.0));
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn flags_override_config_sections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "schema_version": "1",
          "n_sites": 5,
          "profile": {"kind": "tanh", "g_bar1": 0.08, "g_bar2": 0.08},
          "gamma": 1e-4,
          "grid": {"omega_min": -0.2, "omega_max": 0.2, "n_points": 40},
          "loss_sweep": {"parameter": "intrinsic_loss", "values": [0.0, 0.01, 0.02]}
        }"#,
    );
    let out = run(dir.path(), &["loss", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("param,omega,abs2_t21"));
    assert_eq!(csv.lines().count(), 1 + 3 * 40);

    let out = run(dir.path(), &["loss", "--config", &cfg, "--values", "0.05", "--points", "10"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("5.00000000000e-2,")));
    let manifest = read_json(&dir.path().join("loss.manifest.json"));
    assert_eq!(manifest["config"]["loss_sweep"]["values"], serde_json::json!([0.05]));
    assert_eq!(manifest["config"]["grid"]["omega_min"], -0.2);
}

#[test]
fn stokes_flags_unresolved_sidebands() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["stokes", "--n", "5", "--omega-m", "10", "--points", "51", "--integrate"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("stokes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 52);
    assert!(read_json(&dir.path().join("stokes.integrated.json"))["stokes_photons"].as_f64().unwrap() > 0.0);

    let out = run(dir.path(), &["stokes", "--n", "5", "--omega-m", "2", "--points", "51"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stderr).unwrap().contains("resolved-sideband"));
    assert!(read_json(&dir.path().join("stokes.manifest.json"))["warnings"].is_array());
}
