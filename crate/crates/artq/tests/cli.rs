use std::process::Command;

fn artq(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_artq")).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn breakeven_prints_both_algorithms() {
    let (ok, out, _) = artq(&["breakeven", "--theta", "1.51e-5", "--W", "10"]);
    assert!(ok);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "algorithm,theta,W,factor");
    let factor = |line: &str| line.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!((factor(lines[1]) / 1.655e5 - 1.0).abs() < 0.005);
    assert!((factor(lines[2]) / 10.0 - 1.0).abs() < 0.02);
    assert!(!artq(&["breakeven", "--theta", "0.7"]).0);
}

#[test]
fn simulate_writes_csv_and_json() {
    let (ok, out, _) = artq(&["simulate", "--L", "20", "--measure", "P", "--max-reps", "60"]);
    assert!(ok);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,L,theta_nominal,measure,value,rse,reps,seed,distance_calls,diversity_evals"
    );
    assert!(lines.next().unwrap().starts_with("rand,20,0.05,P,"));

    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("f.json");
    let run = dir.path().join("run.json");
    let (ok, _, _) = artq(&[
        "simulate",
        "--L",
        "30",
        "--strategy",
        "qgram",
        "--failure-model",
        "qgram-region:ab:5",
        "--out",
        json.to_str().unwrap(),
        "--run-json",
        run.to_str().unwrap(),
    ]);
    assert!(ok);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["summary"]["measure"], "F");
    assert!(doc["record"]["samples"].as_array().unwrap().len() >= 30);
    let rec: artq_core::RunRecord = serde_json::from_str(&std::fs::read_to_string(&run).unwrap()).unwrap();
    assert!(rec.first_failure.is_some());
}

#[test]
fn simulate_rejects_bad_arguments() {
    let (ok, _, err) = artq(&["simulate", "--failure-model", "sometimes"]);
    assert!(!ok);
    assert!(err.contains("unknown failure model"), "{err}");
    assert!(!artq(&["simulate", "--L", "0"]).0);
    assert!(!artq(&["simulate", "--strategy", "fancy"]).0);
}

#[test]
fn webgen_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("camp");
    let (ok, out, err) = artq(&[
        "webgen",
        "--models",
        "petclinic-like",
        "star",
        "--techniques",
        "rand,qgrams_s",
        "--reps",
        "3",
        "--max-executions",
        "100",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(ok, "{err}");
    assert_eq!(out.lines().count(), 5);
    assert!(out_dir.join("summary.csv").exists());

    let report = dir.path().join("report.csv");
    let (ok, _, err) = artq(&["report", out_dir.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(ok, "{err}");
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.starts_with("model,metric,technique_a,technique_b"));
    assert_eq!(text.lines().count(), 1 + 2 * artq::report::METRICS.len());
}

#[test]
fn webgen_reports_unloadable_models() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema\": 1,").unwrap();
    let (ok, _, err) = artq(&[
        "webgen",
        "--models",
        bad.to_str().unwrap(),
        "--out-dir",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!ok);
    assert!(err.contains("skipped model bad"), "{err}");
}
