use std::collections::BTreeMap;
use std::path::PathBuf;

use diffeostat::runner::{
    parse_config, parse_config_str, render_csv, render_json, run_all, run_experiment, ConfigFile, ReportRecord,
    ResultValue, RunnerError, Verdict,
};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn shipped() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(config_path(""))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

fn vector(r: &ReportRecord, key: &str) -> Vec<f64> {
    match r.result(key) {
        Some(ResultValue::Vector(v)) => v.clone(),
        other => panic!("{key}: {other:?}"),
    }
}

fn scalar(r: &ReportRecord, key: &str) -> f64 {
    match r.result(key) {
        Some(ResultValue::Scalar(v)) => *v,
        other => panic!("{key}: {other:?}"),
    }
}

#[test]
fn shipped_configs_round_trip() {
    let paths = shipped();
    assert!(paths.len() >= 5);
    for p in paths {
        let cfg = parse_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let text = serde_json::to_string_pretty(&cfg.file).unwrap();
        let again = parse_config_str(&text).unwrap();
        assert_eq!(again.file, cfg.file, "{}", p.display());
        let reparsed: ConfigFile = serde_json::from_str(&text).unwrap();
        assert_eq!(reparsed, cfg.file);
    }
}

#[test]
fn malformed_document_reports_position() {
    let err = parse_config_str("{\n  \"space\": [\"a\", \"b\",]\n}").unwrap_err();
    match err {
        RunnerError::Parse { line, column, .. } => assert_eq!((line, column > 0), (2, true)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_fields_are_schema_errors() {
    let top = r#"{"space": ["a", "b"], "sapce": []}"#;
    assert!(matches!(parse_config_str(top), Err(RunnerError::Schema { line: 1, .. })));

    let nested = r#"{"space": ["a", "b"], "plots": {"s": {"kind": "simplex", "dim": 2}}}"#;
    assert!(matches!(parse_config_str(nested), Err(RunnerError::Schema { .. })));

    let experiment = r#"{"space": ["a", "b"], "experiments": [
        {"name": "m", "kind": "monotonicity_sweep", "count": 3, "cuont": 4}]}"#;
    match parse_config_str(experiment) {
        Err(RunnerError::Schema { message, .. }) => assert!(message.contains("cuont"), "{message}"),
        other => panic!("{other:?}"),
    }

    let estimator = r#"{"space": ["a", "b"], "estimators": {"e": {"kind": "plug_in", "epsilon": 0.1}}}"#;
    assert!(matches!(parse_config_str(estimator), Err(RunnerError::Schema { .. })));

    let point = r#"{"space": ["a", "b"], "estimators": {"e": {"kind": "plug_in"}},
        "phis": {"f": {"kind": "coordinate", "atoms": ["a"]}},
        "experiments": [{"name": "c", "kind": "cramer_rao", "estimator": "e", "phi": "f", "basis": "full",
                         "points": [{"measure": [0.5, 0.5], "weight": 1}]}]}"#;
    assert!(matches!(parse_config_str(point), Err(RunnerError::Schema { .. })));

    let shape = r#"{"space": ["a", "b"], "seed": "seven"}"#;
    assert!(matches!(parse_config_str(shape), Err(RunnerError::Schema { .. })));

    let missing_name = r#"{"space": ["a", "b"], "experiments": [{"kind": "monotonicity_sweep", "count": 3}]}"#;
    assert!(matches!(parse_config_str(missing_name), Err(RunnerError::Schema { .. })));
}

#[test]
fn substochastic_row_names_kernel_and_row() {
    let text = r#"{"space": ["a", "b"], "kernels": {"leaky": {"matrix": [[1, 0], [0.5, 0.4]]}}}"#;
    match parse_config_str(text) {
        Err(RunnerError::Validation { object, reason }) => {
            assert!(object.contains("leaky"), "{object}");
            assert!(reason.contains("row 1"), "{reason}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unresolved_references_fail_validation() {
    let cases = [
        r#"{"space": ["a","b"], "experiments": [{"name": "g", "kind": "fisher_gram", "plot": "nope", "thetas": []}]}"#,
        r#"{"space": ["a","b"], "models": {"m": {"plots": ["ghost"]}}}"#,
        r#"{"space": ["a","b"], "plots": {"r": {"kind": "reparam", "of": "r", "offset": [], "linear": [], "domain": []}}}"#,
        r#"{"space": ["a","b"], "kernels": {"k": {"target": "elsewhere", "map": ["a","b"]}}}"#,
        r#"{"space": ["a","b"], "experiments": [
            {"name": "x", "kind": "monotonicity_sweep", "count": 1},
            {"name": "x", "kind": "monotonicity_sweep", "count": 1}]}"#,
    ];
    for text in cases {
        assert!(matches!(parse_config_str(text), Err(RunnerError::Validation { .. })), "{text}");
    }
}

#[test]
fn minimal_config_has_empty_plan() {
    let cfg = parse_config(config_path("minimal.json")).unwrap();
    assert_eq!(cfg.space.len(), 2);
    assert!(cfg.file.experiments.is_empty());
    assert!(run_all(&cfg, 0).unwrap().is_empty());
    assert!(matches!(run_experiment(&cfg, "absent", 0), Err(RunnerError::UnknownExperiment(_))));
}

#[test]
fn tolerance_overrides() {
    let mut cfg = parse_config(config_path("minimal.json")).unwrap();
    cfg.override_tolerance("psd=1e-6").unwrap();
    assert_eq!(cfg.tolerance("psd"), 1e-6);
    assert!(matches!(cfg.override_tolerance("nonsense=1"), Err(RunnerError::Override(_))));
    assert!(matches!(cfg.override_tolerance("psd"), Err(RunnerError::Override(_))));
    assert!(matches!(cfg.override_tolerance("psd=-1"), Err(RunnerError::Override(_))));
}

#[test]
fn reports_are_deterministic_and_order_independent() {
    let cfg = parse_config(config_path("monotonicity.json")).unwrap();
    let a = run_all(&cfg, 7).unwrap();
    let b = run_all(&cfg, 7).unwrap();
    assert_eq!(render_json(&a, false), render_json(&b, false));
    assert_eq!(render_csv(&a, false), render_csv(&b, false));

    let second = run_experiment(&cfg, "random_points", 7).unwrap();
    let tail: Vec<_> = a.iter().filter(|r| r.experiment == "random_points").cloned().collect();
    assert_eq!(render_json(&second, false), render_json(&tail, false));

    let other = run_all(&cfg, 8).unwrap();
    assert_ne!(render_json(&a, false), render_json(&other, false));
}

/// Fisher norm `Σ v_i² / ξ_i` and its image under `T` computed by direct loops.
fn monotonicity_oracle(base: &[f64], dir: &[f64], kernel: &[Vec<f64>]) -> (f64, f64) {
    let norm = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(w, v)| v * v / w).sum::<f64>();
    let m = kernel[0].len();
    let mut pw = vec![0.0; m];
    let mut pv = vec![0.0; m];
    for (i, row) in kernel.iter().enumerate() {
        for j in 0..m {
            pw[j] += row[j] * base[i];
            pv[j] += row[j] * dir[i];
        }
    }
    let pushed = pw.iter().zip(&pv).filter(|(w, _)| **w > 0.0).map(|(w, v)| v * v / w).sum();
    (norm(base, dir), pushed)
}

#[test]
fn monotonicity_sweep_with_seed_seven() {
    let cfg = parse_config(config_path("monotonicity.json")).unwrap();
    let records = run_experiment(&cfg, "random_kernels", 7).unwrap();
    assert_eq!(records.len(), 200);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.record, i);
        assert!(r.verdict.pass);
        assert_eq!(r.tolerances["monotonicity"], 1e-9);
        let gap = scalar(r, "gap");
        assert!(gap >= -1e-9);
        let kernel: Vec<Vec<f64>> = serde_json::from_value(r.inputs["kernel"].clone()).unwrap();
        let (before, after) = monotonicity_oracle(&vector(r, "base"), &vector(r, "direction"), &kernel);
        assert!((before - scalar(r, "fisher_norm_sq")).abs() <= 1e-9 * before.max(1.0));
        assert!((after - scalar(r, "pushed_fisher_norm_sq")).abs() <= 1e-9 * after.max(1.0));
    }
}

#[test]
fn plug_in_cramer_rao_is_attained() {
    let cfg = parse_config(config_path("cramer_rao.json")).unwrap();
    let records = run_experiment(&cfg, "plug_in_full_simplex", 0).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert_eq!(r.verdict, Verdict::new(true, "attained"));
        assert!(scalar(r, "gap_max_abs") <= 1e-10);
        assert!(r.tolerances.contains_key("attained") && r.tolerances.contains_key("psd"));
    }
    // variance of the indicator of atom a under ξ = (0.5, 0.3, 0.2)
    let Some(ResultValue::Matrix(v)) = records[0].result("variance") else { panic!() };
    assert!((v[0][0] - 0.25).abs() < 1e-15 && (v[0][1] + 0.15).abs() < 1e-15 && (v[1][1] - 0.21).abs() < 1e-15);

    let smoothed = run_experiment(&cfg, "smoothed_on_tilt", 0).unwrap();
    assert_eq!(smoothed[0].verdict, Verdict::new(true, "bound holds"));
}

#[test]
fn bernoulli_sum_statistic_is_sufficient() {
    let cfg = parse_config(config_path("bernoulli_sufficiency.json")).unwrap();
    let r = &run_experiment(&cfg, "sum_statistic", 0).unwrap()[0];
    assert_eq!(r.verdict, Verdict::new(true, "sufficient"));
    assert!(scalar(r, "max_discrepancy") <= 1e-12);
    assert!(scalar(r, "max_abs_fisher_gap") <= 1e-8);
    // given one success out of two, either coin is equally likely
    let Some(ResultValue::Matrix(c)) = r.result("conditional") else { panic!() };
    assert_eq!(c.len(), 3);
    assert!((c[1][1] - 0.5).abs() < 1e-12 && (c[1][2] - 0.5).abs() < 1e-12);

    let coin = &run_experiment(&cfg, "first_coin_only", 0).unwrap()[0];
    assert_eq!(coin.verdict, Verdict::new(true, "not sufficient"));
}

#[test]
fn chessboard_report_lists_span_dims() {
    let cfg = parse_config(config_path("chessboard.json")).unwrap();
    assert_eq!(cfg.file.experiments.iter().filter(|e| e.kind.as_str() == "cone_probe").count(), 1);
    let records = run_experiment(&cfg, "chessboard_cone", 0).unwrap();
    let dims: Vec<_> = records.iter().map(|r| r.result("span_dim").cloned().unwrap()).collect();
    assert_eq!(dims, [2, 1, 2].map(ResultValue::Integer));
    let linear: Vec<_> = records.iter().map(|r| r.result("is_linear").cloned().unwrap()).collect();
    assert_eq!(linear, [true, true, false].map(ResultValue::Bool));

    let json: serde_json::Value = serde_json::from_slice(&render_json(&records, false)).unwrap();
    let from_json: Vec<i64> = json["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["results"]["span_dim"].as_i64().unwrap())
        .collect();
    assert_eq!(from_json, [2, 1, 2]);
}

#[test]
fn failing_expectation_yields_failing_verdict() {
    let text = std::fs::read_to_string(config_path("chessboard.json"))
        .unwrap()
        .replace(r#""span_dim": 1, "is_linear": true"#, r#""span_dim": 2, "is_linear": true"#);
    let cfg = parse_config_str(&text).unwrap();
    let records = run_experiment(&cfg, "chessboard_cone", 0).unwrap();
    assert_eq!(records.iter().map(|r| r.verdict.pass).collect::<Vec<_>>(), [true, false, true]);
}

fn single(value: f64) -> ReportRecord {
    ReportRecord {
        experiment: "e".into(),
        kind: "fisher_gram".into(),
        record: 0,
        inputs: serde_json::json!({}),
        results: vec![("x".into(), ResultValue::Scalar(value))],
        verdict: Verdict::new(true, "ok"),
        tolerances: BTreeMap::from([("psd".to_string(), 1e-9)]),
        wall_time: Some(0.25),
    }
}

#[test]
fn reals_round_trip_through_json() {
    for x in [0.1 + 0.2, 1.0 / 3.0, -2.0f64.sqrt(), 5e-324, f64::MAX, 1e300 / 7.0, 0.0] {
        let bytes = render_json(&[single(x)], false);
        let doc: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(doc["records"][0]["results"]["x"].as_f64().unwrap().to_bits(), x.to_bits(), "{x:e}");
        assert!(doc["records"][0].get("wall_time_s").is_none());
    }
    let doc: serde_json::Value = serde_json::from_slice(&render_json(&[single(1.0)], true)).unwrap();
    assert_eq!(doc["records"][0]["wall_time_s"].as_f64(), Some(0.25));
}

#[test]
fn csv_flattens_matrices_with_indices() {
    let mut r = single(1.5);
    r.results.push(("m".into(), ResultValue::Matrix(vec![vec![1.0, 2.0], vec![3.0, 4.0]])));
    let text = String::from_utf8(render_csv(&[r], false)).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["experiment", "record", "key", "row", "col", "value"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let cell = rows.iter().find(|r| &r[2] == "m" && &r[3] == "1" && &r[4] == "0").unwrap();
    assert_eq!(cell[5].parse::<f64>().unwrap(), 3.0);
    assert!(rows.iter().any(|r| &r[2] == "tolerance.psd"));
    assert!(rows.iter().any(|r| &r[2] == "verdict.pass" && &r[5] == "true"));
}

#[test]
fn empty_reports() {
    let doc: serde_json::Value = serde_json::from_slice(&render_json(&[], false)).unwrap();
    assert_eq!(doc, serde_json::json!({ "records": [] }));
    assert_eq!(String::from_utf8(render_csv(&[], false)).unwrap(), "experiment,record,key,row,col,value\n");
}

#[test]
fn every_verdict_echoes_its_tolerances() {
    for p in shipped() {
        let cfg = parse_config(&p).unwrap();
        for r in run_all(&cfg, cfg.seed()).unwrap() {
            assert!(!r.tolerances.is_empty(), "{}[{}]", r.experiment, r.record);
            for (k, v) in &r.tolerances {
                if let Some(configured) = cfg.tolerances.get(k) {
                    assert_eq!(v, configured);
                }
            }
        }
    }
}
