//! End-to-end tests of the installed binary: exit codes, table contents,
//! CSV shape, and artifact determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SYSTEM_B: &str = "\
[plant]
num = [0.0, -1.5]
den = [1.0, -2.0]

[noise]
sigma_w2 = 1.0
sigma_v2 = 1.0
";

const OPEN_LOOP: &str = "\
[plant]
num = [0.0]
den = [1.0]

[noise]
sigma_w2 = 1.0
sigma_v2 = 1.0
";

const NO_FORWARD_NOISE: &str = "\
[plant]
num = [0.0, -1.5]
den = [1.0, -2.0]

[noise]
sigma_w2 = 0.0
sigma_v2 = 1.0
";

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("loop.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn analyze_prints_closed_form_rates() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&["analyze", cfg.to_str().unwrap()]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    assert!(text.contains("0.693147"), "{text}");
    assert!(text.contains("0.346574"), "{text}");
    assert!(text.contains("1.039721"), "{text}");
}

#[test]
fn analyze_reports_zero_message_rate_without_feedback() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), OPEN_LOOP);
    let out = run_cli(&["analyze", cfg.to_str().unwrap()]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    let r_x_line = text
        .lines()
        .find(|l| l.contains("r_x"))
        .expect("r_x row present");
    assert!(r_x_line.contains("0.000000"), "{r_x_line}");
}

#[test]
fn unstable_loop_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[plant]\nnum = [0.0, 1.0]\nden = [1.0, -3.0]\n\n[noise]\nsigma_w2 = 1.0\nsigma_v2 = 1.0\n",
    );
    let out = run_cli(&["analyze", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("closed loop unstable"), "{}", stderr_of(&out));
}

#[test]
fn unknown_config_key_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{SYSTEM_B}sigma_q = 3.0\n"));
    let out = run_cli(&["analyze", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("unknown field"), "{}", stderr_of(&out));
}

#[test]
fn verify_gates_system_b() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&["verify", cfg.to_str().unwrap(), "--n", "32"]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    assert!(text.contains("PASS"), "{text}");
}

#[test]
fn verify_prints_scalar_closed_forms() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), OPEN_LOOP);
    let out = run_cli(&["verify", cfg.to_str().unwrap(), "--n", "1"]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    for value in ["0.549306", "0.202733", "0.346574"] {
        assert!(text.contains(value), "missing {value} in {text}");
    }
}

#[test]
fn verify_rejects_zero_horizon() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&["verify", cfg.to_str().unwrap(), "--n", "0"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn sweep_emits_constant_noise_column_and_limit_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&["sweep", cfg.to_str().unwrap(), "--n-list", "8,16,32"]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");

    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,i_total_per_n,i_x_per_n,i_cond_per_n,residual");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("limit,"), "{}", lines[4]);

    let half_ln2 = 0.5 * std::f64::consts::LN_2;
    for line in &lines[1..] {
        let cond: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((cond - half_ln2).abs() <= 1e-12, "{line}");
        let residual: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(residual.abs() <= 1e-8, "{line}");
    }
}

#[test]
fn sweep_zero_forward_noise_pins_cond_column_to_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), NO_FORWARD_NOISE);
    let out = run_cli(&["sweep", cfg.to_str().unwrap(), "--n-list", "4,8"]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    for line in text.lines().skip(1).filter(|l| !l.starts_with("limit")) {
        let cond: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(cond, 0.0, "{line}");
    }
}

#[test]
fn sweep_rejects_unordered_list() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&["sweep", cfg.to_str().unwrap(), "--n-list", "32,16"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn simulate_gate_passes_and_artifacts_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let mut first = None;
    for out_dir in [&out_a, &out_b] {
        let out = run_cli(&[
            "simulate",
            cfg.to_str().unwrap(),
            "--n",
            "256",
            "--trials",
            "1000",
            "--seed",
            "42",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        let text = stdout_of(&out);
        assert_eq!(exit_code(&out), 0, "{text}");
        assert!(text.contains("PASS"), "{text}");
        first = Some(text);
    }
    drop(first);

    for name in ["covariance_e.csv", "periodogram_e.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let psd = fs::read_to_string(out_a.join("periodogram_e.csv")).unwrap();
    assert_eq!(psd.lines().next().unwrap(), "theta,periodogram,analytic");
}

#[test]
fn simulate_single_trial_is_covariance_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--n",
        "256",
        "--trials",
        "1",
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
        "--json",
    ]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["results"]["mode"], "covariance-only");
    assert!(report["results"]["pass"].is_null());
}

#[test]
fn simulate_fails_gate_with_few_trials() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--n",
        "256",
        "--trials",
        "100",
        "--seed",
        "7",
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 1, "{text}");
    assert!(text.contains("FAIL"), "{text}");
}

#[test]
fn json_report_carries_schema_and_config_echo() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&["verify", cfg.to_str().unwrap(), "--n", "8", "--json"]);
    assert_eq!(exit_code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "verify");
    assert_eq!(report["config"]["plant"]["num"][1], -1.5);
    assert_eq!(report["config"]["noise"]["sigma_v2"], 1.0);
    assert_eq!(report["results"]["pass"], true);
    assert_eq!(report["results"]["report"]["init"], "rest");
    assert!(report["tool_version"].as_str().unwrap().contains('.'));
}

#[test]
fn finite_reports_stationary_horizon() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SYSTEM_B);
    let out = run_cli(&[
        "finite",
        cfg.to_str().unwrap(),
        "--n",
        "16",
        "--init",
        "stationary",
    ]);
    let text = stdout_of(&out);
    assert_eq!(exit_code(&out), 0, "{text}");
    assert!(text.contains("i_total"), "{text}");
    assert!(text.contains("stationary"), "{text}");
}

#[test]
fn help_documents_exit_codes_and_csv_columns() {
    let out = run_cli(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).contains("Exit codes"), "{}", stdout_of(&out));

    let out = run_cli(&["sweep", "--help"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).contains("CSV columns"), "{}", stdout_of(&out));

    let out = run_cli(&["simulate", "--help"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).contains("covariance_e.csv"), "{}", stdout_of(&out));
}
