//! End-to-end checks of the command-line interface and its exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfisac"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_RUN: &str = r#"
[scenario]
num_aps = 2
num_antennas = 4
num_users = 2
num_targets = 2
p_max_dbm = 30.0
noise_dbm = -80.0
sensing_thresholds_dbm = [20.0]
ap_positions = [[10.0, 10.0], [80.0, 80.0]]
rng_seed = 33

[experiment]
algorithms = ["ALMCI", "ZF"]
num_trials = 2
emit = ["summary-json", "trials-csv"]
"#;

const TINY_ORACLE: &str = r#"
[scenario]
num_aps = 1
num_antennas = 2
num_users = 1
num_targets = 1
p_max_dbm = 20.0
noise_dbm = -80.0
sensing_thresholds_dbm = [14.0]
ap_positions = [[10.0, 10.0]]
rng_seed = 5

[experiment]
algorithms = ["ALMCI", "ORACLE"]
num_trials = 1
oracle_resolution = 32
"#;

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SMALL_RUN);
    let out = tmp.path().join("artifacts");
    let status = bin()
        .args(["run"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "stderr: {}", String::from_utf8_lossy(&status.stderr));
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("mean_sum_rate_bps_hz"));
    // resolved defaults are echoed for provenance
    assert!(summary.contains("\"delta1\": 1e-6"));
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    // header + trials x algorithms rows
    assert_eq!(trials.lines().count(), 1 + 2 * 2);
}

#[test]
fn unknown_subcommand_exits_two() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_error_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &SMALL_RUN.replace("num_aps", "num_apz"));
    let out = bin().args(["run"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_apz"));
}

#[test]
fn gradcheck_reports_small_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SMALL_RUN);
    let out = bin()
        .args(["gradcheck"])
        .arg(&config)
        .args(["--instances", "3", "--dirs", "10"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max relative gradient error"), "stdout: {text}");
}

#[test]
fn oracle_subcommand_compares_solver() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "tiny.toml", TINY_ORACLE);
    let out = bin().args(["oracle"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("oracle sum rate"), "stdout: {text}");
    assert!(text.contains("solver sum rate"), "stdout: {text}");
}

#[test]
fn beampattern_has_expected_row_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SMALL_RUN);
    let out_dir = tmp.path().join("bp");
    let out = bin()
        .args(["beampattern"])
        .arg(&config)
        .args(["--alg", "ZF", "--angle-step", "1"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("beampattern_zf.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 181);
    assert!(csv.starts_with("angle_deg,gain_dbm_ap1,gain_dbm_ap2\n"));
}

#[test]
fn beampattern_rejects_bad_step() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SMALL_RUN);
    let out = bin()
        .args(["beampattern"])
        .arg(&config)
        .args(["--alg", "ZF", "--angle-step", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zf_beampattern_ignores_threshold_changes() {
    let tmp = tempfile::tempdir().unwrap();
    let config_a = write_config(tmp.path(), "a.toml", SMALL_RUN);
    let config_b = write_config(
        tmp.path(),
        "b.toml",
        &SMALL_RUN.replace("sensing_thresholds_dbm = [20.0]", "sensing_thresholds_dbm = [5.0]"),
    );
    let mut outputs = Vec::new();
    for (config, sub) in [(&config_a, "a_out"), (&config_b, "b_out")] {
        let out_dir = tmp.path().join(sub);
        let out = bin()
            .args(["beampattern"])
            .arg(config)
            .args(["--alg", "ZF"])
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(std::fs::read(out_dir.join("beampattern_zf.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SMALL_RUN);
    let env_out = tmp.path().join("from_env");
    let status = bin()
        .args(["run"])
        .arg(&config)
        .env("CFISAC_OUT_DIR", &env_out)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(env_out.join("summary.json").exists());
}
