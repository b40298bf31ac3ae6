use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffeostat")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn passing_run_exits_zero_and_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("chessboard.json");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&["run", path(&cfg), "--out", path(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn stdout_formats_and_selection() {
    let cfg = config("cramer_rao.json");
    let o = run(&["run", path(&cfg), "--experiment", "plug_in_full_simplex", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("experiment,record,key,row,col,value\n"));
    assert!(text.contains("plug_in_full_simplex,1,verdict.label,,,attained"));
    assert!(!text.contains("smoothed_on_tilt"));

    let o = run(&["run", path(&cfg), "--experiment", "plug_in_full_simplex", "--timings"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["records"][0]["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn seed_flag_changes_sweeps_only_through_the_seed() {
    let cfg = config("monotonicity.json");
    let by_flag = run(&["run", path(&cfg), "--experiment", "random_points", "--seed", "7"]);
    let by_file = run(&["run", path(&cfg), "--experiment", "random_points"]);
    let other = run(&["run", path(&cfg), "--experiment", "random_points", "--seed", "8"]);
    assert_eq!(by_flag.stdout, by_file.stdout);
    assert_ne!(by_flag.stdout, other.stdout);
}

#[test]
fn failed_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("bernoulli_sufficiency.json"))
        .unwrap()
        .replace(r#""expect_sufficient": false"#, r#""expect_sufficient": true"#);
    let cfg = dir.path().join("wrong.json");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["run", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("first_coin_only"));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["records"].as_array().unwrap().len(), 4);
}

#[test]
fn tolerance_override_can_fail_a_verdict() {
    let cfg = config("cramer_rao.json");
    let o = run(&["run", path(&cfg), "--experiment", "plug_in_full_simplex", "--tol-override", "attained=0"]);
    assert_eq!(o.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["records"][0]["tolerances"]["attained"].as_f64(), Some(0.0));
}

#[test]
fn errors_exit_one() {
    let cfg = config("minimal.json");
    let missing = run(&["run", "/definitely/not/here.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));

    assert_eq!(run(&["run", path(&cfg), "--experiment", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["run", path(&cfg), "--tol-override", "speed=3"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"space\": [\"a\"], \"kernels\": {\"k\": {\"matrix\": [[0.9]]}}}").unwrap();
    let o = run(&["run", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kernel \"k\"") && err.contains("row 0"), "{err}");
}

#[test]
fn minimal_config_emits_empty_documents() {
    let cfg = config("minimal.json");
    let o = run(&["run", path(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc, serde_json::json!({ "records": [] }));
    let o = run(&["run", path(&cfg), "--format", "csv"]);
    assert_eq!(o.stdout, b"experiment,record,key,row,col,value\n");
}
