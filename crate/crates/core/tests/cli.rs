use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spikekit::bubble::make_context;
use spikekit::greens::ball_kernel;
use spikekit::tabulated::{GridSpec, TabulatedKernel};

fn spikekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikekit")).args(args).env_remove("SPIKEKIT_SEED").output().expect("binary runs")
}

fn records(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("records.json")).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constants_n6_prints_equal_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikekit(&["constants", "--n", "6", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "spikekit/1");
    assert_eq!(v["a_versus_b"], "equal");
    let p3 = std::f64::consts::PI.powi(3);
    assert!((v["a_const"].as_f64().unwrap() / (96.0 * p3) - 1.0).abs() < 1e-12);
    assert_eq!(records(dir.path()), v);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("n,c_n,omega_n,a_const,b_const,sobolev_level,a_versus_b\n6,"));
}

#[test]
fn constants_reject_small_dimension() {
    let out = spikekit(&["constants", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn constants_n7_differ() {
    let out = spikekit(&["constants", "--n", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_ne!(v["a_versus_b"], "equal");
}

#[test]
fn critical_points_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["critical-points", "--starts", "16", "--seed", "11", "--out", path(dir.path())];
    assert_eq!(spikekit(&args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("records.json")).unwrap();
    assert_eq!(spikekit(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("records.json")).unwrap());
    let v = records(dir.path());
    let recs = v["records"].as_array().unwrap();
    assert_eq!(recs.len(), 1);
    let h = recs[0]["configuration"]["heights"][0].as_f64().unwrap();
    assert!((h - 1.0 / 48f64.sqrt()).abs() < 1e-8);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("index,k,psi,gradient_norm,nondegenerate,m_positive,min_abs_eigenvalue,points,heights\n"));
}

#[test]
fn zero_starts_give_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikekit(&["critical-points", "--k", "3", "--starts", "0", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(records(dir.path())["records"].as_array().unwrap().len(), 0);
}

#[test]
fn seed_environment_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spikekit"))
        .args(["critical-points", "--starts", "2", "--seed", "5", "--out", path(dir.path())])
        .env("SPIKEKIT_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(records(dir.path())["config"]["seed"], 99);
}

#[test]
fn missing_kernel_file_exits_3() {
    let out = spikekit(&["critical-points", "--domain", "tabulated:/nonexistent/table.bin", "--starts", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn truncated_kernel_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.bin");
    std::fs::write(&file, b"SPKGRN1\0\x05\0\0\0").unwrap();
    let spec = format!("tabulated:{}", path(&file));
    let out = spikekit(&["critical-points", "--n", "5", "--domain", &spec, "--starts", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"));
}

#[test]
fn tabulated_kernel_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = make_context(5).unwrap();
    let ball = ball_kernel(&ctx, &[0.0; 5], 0.3).unwrap();
    let bytes = TabulatedKernel::encode(&ball, &GridSpec::cube(5, 3, 0.13)).unwrap();
    let file = dir.path().join("ball.bin");
    std::fs::write(&file, bytes).unwrap();
    let spec = format!("tabulated:{}", path(&file));
    let out_dir = dir.path().join("out");
    let out = spikekit(&["critical-points", "--n", "5", "--domain", &spec, "--starts", "4", "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(records(&out_dir)["records"].is_array());
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.toml");
    std::fs::write(&file, "n = 6\nbogus = 1\n").unwrap();
    assert_eq!(spikekit(&["critical-points", "--config", path(&file)]).status.code(), Some(2));
    assert_eq!(spikekit(&["verify", "--only", "nonsense"]).status.code(), Some(2));
    assert_eq!(spikekit(&["verify", "--domain", "ball:-1"]).status.code(), Some(2));
}

#[test]
fn verify_selected_groups_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikekit(&["verify", "--only", "constants,bubble,2", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let v = records(dir.path());
    let ids: Vec<u64> = v["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [1, 2, 3]);
    assert_eq!(v["all_pass"], true);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("criterion,name,group,result,failed_checks\n1,constants,constants,pass,"));
}

#[test]
fn tampered_tolerance_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.toml");
    std::fs::write(&file, "[tolerances]\nmoment_rel = 1e-300\n").unwrap();
    let out = spikekit(&["verify", "--config", path(&file), "--only", "3", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("FAIL criterion  3"));
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.contains(",fail,"));
}

#[test]
fn predict_writes_power_law_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikekit(&[
        "predict", "--rho", "1e-4", "--rho", "1e-6", "--starts", "8", "--samples", "20000", "--out", path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = records(dir.path());
    let preds = v["predictions"].as_array().unwrap();
    assert_eq!(preds.len(), 2);
    let h0 = preds[0]["prediction"]["spike_heights"][0].as_f64().unwrap();
    let h1 = preds[1]["prediction"]["spike_heights"][0].as_f64().unwrap();
    assert!((h1 / h0 - 10.0).abs() < 1e-10);
    let b = 96.0 * std::f64::consts::PI.powi(3);
    assert!((h0 / (b / 1e-4f64).sqrt() - 1.0).abs() < 1e-8);
    assert!(preds[0]["mass_check"].is_object());
}
