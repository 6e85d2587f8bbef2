use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charp-qkz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn solve_matches_golden_json() {
    for (kappa, file) in [("3", "solve_p5_n2_kappa3.json"), ("2", "solve_p5_n2_kappa2.json")] {
        let o = run(&["solve", "--p", "5", "--n", "2", "--kappa", kappa, "--format", "json"]);
        assert!(o.status.success());
        assert_eq!(stdout(&o), golden(file));
    }
}

#[test]
fn solve_text() {
    let o = run(&["solve", "--p", "5", "--n", "2", "--kappa", "3"]);
    assert!(stdout(&o).contains("Q^4 = (-2*z1 + 2*z2 + 2, 2*z1 - 2*z2 - 2)"));
    let o = run(&["solve", "--p", "5", "--n", "2", "--kappa", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d(kappa)=0"));
    // -2 is the same step as 3
    let o = run(&["solve", "--p", "5", "--n", "2", "--kappa", "-2"]);
    assert!(stdout(&o).contains("k=3 d(kappa)=1"));
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let o = run(&["solve", "--p", "4", "--n", "2", "--kappa", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not prime"));
    let o = run(&["solve", "--p", "5", "--n", "2", "--kappa", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify", "--suites", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_rmatrix_small_prime() {
    let o = run(&["verify", "--suites", "rmatrix", "--p", "3", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "charp-qkz/1");
    assert_eq!(v["passed"], true);
    assert!(v["suites"]["rmatrix"]["p=3"]["passed"] == true);
    assert_eq!(v["skipped"].as_array().unwrap().len(), 3);
}

#[test]
fn sabotage_fails_with_witness() {
    let o = run(&[
        "verify", "--p", "5", "--n", "3", "--kappa", "2", "--suites", "leading,curvature", "--points", "5",
        "--format", "json", "--sabotage",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for suite in ["leading", "curvature"] {
        let entry = &v["suites"][suite]["p=5,n=3,kappa=2"];
        assert_eq!(entry["passed"], false, "{suite}");
        assert!(!entry["failures"][0]["witness"].as_str().unwrap().is_empty());
    }
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--p", "5,7", "--n", "2..3", "--points", "5", "--seed", "9", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    // κ outside F_p is routed to its own suite only
    let ext = v["suites"]["ext_kappa"].as_object().unwrap();
    assert_eq!(ext.len(), 4 * 5);
    assert!(ext.keys().all(|k| k.contains("*g")));
    assert!(v["suites"]["solutions"].as_object().unwrap().keys().all(|k| !k.contains("*g")));
}

#[test]
fn report_table() {
    let o = run(&["report", "--p", "5", "--n", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), golden("report_p5_n3.txt"));
    let o = run(&["report", "--p", "5", "--n", "3", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r["d"].as_u64().unwrap() + r["d_dual"].as_u64().unwrap(), 2);
        assert_eq!(r["gram_det_is_n"], true);
    }
}

#[test]
fn empty_report() {
    let o = run(&["report", "--p", "5", "--n", "7", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 0);
}

#[test]
fn curvature_and_ortho_commands() {
    let o = run(&["curvature", "--p", "5", "--n", "2", "--kappa", "1+1*g", "--points", "3", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for r in v["records"].as_array().unwrap() {
        assert_ne!(r["det_on_v"], serde_json::json!([0, 0]));
    }
    let o = run(&["ortho", "--p", "5", "--n", "3", "--kappa", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    let o = run(&["ortho", "--p", "5", "--n", "2", "--kappa", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("charp-qkz-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("q.json");
    let o = run(&["solve", "--p", "5", "--n", "2", "--kappa", "3", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), golden("solve_p5_n2_kappa3.json"));
    std::fs::remove_dir_all(dir).ok();
}
