use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[array]
M = 32

[ofdm]
B_hz = 2e7
Ks_max = 8

[combiner]
N_RF = 4
N_RF_sweep = [2, 4, 8]
seeds = 2

[snapshots]
N = 64

[sweep]
range_points = 4
bandwidth_min_hz = 5e6
bandwidth_max_hz = 4e7
bandwidth_points = 3
mismatch_bandwidths_hz = [1e7, 4e7]
mismatch_range_points = 5
"#;

fn nfcrb(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("small.toml");
    if !cfg.exists() {
        fs::write(&cfg, SMALL).unwrap();
    }
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_nfcrb"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nfcrb(dir.path(), &["--help"]).status.code(), Some(0));
    let v = Command::new(env!("CARGO_BIN_EXE_nfcrb")).arg("--version").output().unwrap();
    assert_eq!(v.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nfcrb(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(nfcrb(dir.path(), &["decompose", "--array.M", "-4"]).status.code(), Some(1));
    assert_eq!(nfcrb(dir.path(), &["decompose", "--combiner.N_RF", "64"]).status.code(), Some(1));
    assert_eq!(nfcrb(dir.path(), &["decompose", "--unknown.key", "1"]).status.code(), Some(1));
    let missing = Command::new(env!("CARGO_BIN_EXE_nfcrb"))
        .args(["decompose", "--config", "/nonexistent/x.toml", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn endfire_path_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = nfcrb(dir.path(), &["decompose", "--paths.0.theta_deg", "0"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mismatch_grid_shape_and_carrier_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = nfcrb(dir.path(), &["mismatch"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("out/mismatch.csv"));
    assert_eq!(header, ["B_mhz", "alpha", "r_m", "delta"]);
    let (ib, ia, id) = (col(&header, "B_mhz"), col(&header, "alpha"), col(&header, "delta"));
    for b in ["1.0000000000000000e1", "4.0000000000000000e1"] {
        let block: Vec<_> = rows.iter().filter(|r| r[ib] == b).collect();
        let alphas: std::collections::BTreeSet<&str> = block.iter().map(|r| r[ia].as_str()).collect();
        assert_eq!(block.len(), alphas.len() * 5, "B = {b}");
        let carrier: Vec<f64> = block.iter().filter(|r| r[ia].parse::<f64>().unwrap() == 1.0).map(|r| r[id].parse().unwrap()).collect();
        assert_eq!(carrier.len(), 5);
        assert!(carrier.iter().all(|&d| d == 0.0));
    }
    assert!(dir.path().join("out/mismatch_summary.json").exists());
    assert!(dir.path().join("out/mismatch_B10MHz.svg").exists());
}

#[test]
fn reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let names = ["sweep_bw.csv", "sweep_bw_seeds.csv", "sweep_bw.json", "sweep_bw.csv.meta.json"];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert!(nfcrb(a.path(), &["sweep-bw", "--format", "csv,json"]).status.success());
        snapshots.push(names.map(|n| fs::read(a.path().join("out").join(n)).unwrap()));
    }
    for (i, name) in names.iter().enumerate() {
        assert!(snapshots[0][i] == snapshots[1][i], "{name} differs between runs");
    }
    assert!(!a.path().join("out/sweep_bw.svg").exists());
}

#[test]
fn worker_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(nfcrb(a.path(), &["sweep-nrf", "--workers", "1", "--format", "csv"]).status.success());
    assert!(nfcrb(b.path(), &["sweep-nrf", "--workers", "3", "--format", "csv"]).status.success());
    assert_eq!(fs::read(a.path().join("out/sweep_nrf.csv")).unwrap(), fs::read(b.path().join("out/sweep_nrf.csv")).unwrap());
}

#[test]
fn csv_sidecar_carries_config_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = nfcrb(dir.path(), &["decompose", "--seed", "7", "--seeds", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/decompose.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "decompose");
    assert_eq!(meta["seeds"], serde_json::json!([7, 8, 9]));
    assert_eq!(meta["config"]["array"]["M"], 32);
    let (_, rows) = read_csv(&dir.path().join("out/decompose.csv"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn range_sweep_has_flag_column_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let out = nfcrb(dir.path(), &["sweep-range", "--ebrd-m", "3.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("out/sweep_range.csv"));
    assert_eq!(rows.len(), 4);
    let flag = col(&header, "range_infinite");
    assert!(rows.iter().all(|r| r[flag] == "0"));
    let svg = fs::read_to_string(dir.path().join("out/sweep_range_r.svg")).unwrap();
    assert!(svg.contains("EBRD") && svg.contains("<metadata>"));
}

#[test]
fn verify_passes_then_fails_under_fault_injection() {
    let dir = tempfile::tempdir().unwrap();
    let ok = nfcrb(dir.path(), &["verify"]);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("PASS finite-difference-derivatives"), "{text}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/verify.json")).unwrap()).unwrap();
    let failing: Vec<&str> = report["data"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(ok.status.code(), Some(if failing.is_empty() { 0 } else { 3 }), "{failing:?}");

    let bad = nfcrb(dir.path(), &["verify", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL finite-difference-derivatives"));
}
