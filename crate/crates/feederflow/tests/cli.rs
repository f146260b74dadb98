use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn feederflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feederflow")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, sub: &str, network: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, network.to_str().unwrap(), "--grid-h-km", "0.01", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    feederflow(&args)
}

fn error_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"].clone()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn solve_writes_profile_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &example("simple5km.json"), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("profile.csv"));
    assert_eq!(header, ["segment_id", "x_km", "theta_rad", "v_pu", "s_pu", "w_pu_per_km"]);
    assert_eq!(rows.len(), 501);
    assert_eq!(rows[0][3], "1");
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["residual"]["ode"].as_f64().unwrap() <= 1e-10);
    assert!(report["iterations"].as_u64().unwrap() >= 1);
    assert!(report["metadata"]["generated_unix_s"].is_u64());
}

#[test]
fn repeated_runs_are_identical_outside_metadata() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(run_in(d.path(), "solve", &example("branched.json"), &[]).status.success());
    }
    let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "profile.csv"), read(&b, "profile.csv"));
    let strip = |d: &tempfile::TempDir| {
        let mut v: Value = serde_json::from_slice(&read(d, "report.json")).unwrap();
        v.as_object_mut().unwrap().remove("metadata");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn compare_has_one_row_per_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "compare", &example("simple5km.json"), &["--orders", "1,2,3,4"]);
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("compare.csv"));
    assert_eq!(header, ["order", "dw_root", "dv_far_leaf", "dtheta_far_leaf", "l2_v", "linf_v"]);
    assert_eq!(rows.len(), 4);
    let dv: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(dv.windows(2).all(|w| w[1] < w[0]));
    let text = fs::read_to_string(dir.path().join("compare.txt")).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn expand_leaves_theta_blank_above_order_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "expand", &example("branched.json"), &["--order", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h4, r4) = read_csv(&dir.path().join("order_4.csv"));
    let (h5, r5) = read_csv(&dir.path().join("order_5.csv"));
    assert_eq!(h4[2], "theta4_rad");
    assert_eq!(h5[3], "v5_pu");
    assert!(!r4[10][2].is_empty());
    assert!(r5[10][2].is_empty() && r5[10][4].is_empty());
    assert!(dir.path().join("assembled.csv").exists());
}

#[test]
fn impact_without_ev_share_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "impact", &example("simple5km.json"), &["--eps-ev-fraction", "0"]);
    assert!(out.status.success());
    let s: Value = serde_json::from_slice(&fs::read(dir.path().join("impact_summary.json")).unwrap()).unwrap();
    assert_eq!(s["max_abs_pu"].as_f64(), Some(0.0));

    let out = run_in(dir.path(), "impact", &example("simple5km.json"), &["--eps-ev-fraction", "0.4"]);
    assert!(out.status.success());
    let s: Value = serde_json::from_slice(&fs::read(dir.path().join("impact_summary.json")).unwrap()).unwrap();
    assert!(s["max_abs_pu"].as_f64().unwrap() > 0.0);
    assert_eq!(s["location"]["segment"], "F");
}

#[test]
fn sweep_rows_follow_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "sweep", &example("simple5km.json"), &["--eps-ev-fraction", "0,0.3,0.6"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    let fractions: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(fractions, ["0", "0.3", "0.6"]);
    let errors: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(errors[0] <= 1e-9);
    assert!(errors[1] <= errors[2]);
}

#[test]
fn validate_prints_summary() {
    let out = feederflow(&["validate", example("branched.json").to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["segments"], 4);
    assert!((v["total_length_km"].as_f64().unwrap() - 5.5).abs() < 1e-12);
}

#[test]
fn malformed_json_names_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"segments\": [\n    {\"id\": \"A\",, }\n  ]\n}\n").unwrap();
    let e = error_json(&feederflow(&["validate", path.to_str().unwrap()]));
    assert_eq!(e["code"], "parse_error");
    assert_eq!(e["line"], 3);
    assert!(e["column"].as_u64().unwrap() > 0);
}

#[test]
fn invalid_network_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    let text =
        fs::read_to_string(example("simple5km.json")).unwrap().replace("\"kind\": \"leaf\"", "\"kind\": \"junction\"");
    fs::write(&path, text).unwrap();
    let e = error_json(&feederflow(&["solve", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]));
    assert_eq!(e["code"], "invalid_network");
    assert!(!e["violations"].as_array().unwrap().is_empty());
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn missing_file_and_bad_flags_fail_cleanly() {
    let e = error_json(&feederflow(&["solve", "/nonexistent/net.json"]));
    assert_eq!(e["code"], "io_error");
    let e =
        error_json(&feederflow(&["impact", example("simple5km.json").to_str().unwrap(), "--eps-ev-fraction", "1.5"]));
    assert_eq!(e["code"], "usage_error");
    let e = error_json(&feederflow(&["solve", example("simple5km.json").to_str().unwrap(), "--grid-h-km", "-1"]));
    assert_eq!(e["code"], "usage_error");
    let e = error_json(&feederflow(&["frobnicate"]));
    assert_eq!(e["code"], "usage_error");
}

#[test]
fn collapse_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heavy.json");
    let text = fs::read_to_string(example("simple5km.json")).unwrap().replace("-0.200", "-0.900");
    fs::write(&path, text).unwrap();
    let e = error_json(&run_in(dir.path(), "solve", &path, &[]));
    assert!(e["code"] == "voltage_collapse" || e["code"] == "non_convergence", "{e}");
}
