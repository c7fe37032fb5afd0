mod common;

use std::path::Path;
use std::process::Command;

use common::{expected_f64, fixture};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("regard-audit").chain(args.iter().copied());
    let code = regard_audit::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_ok(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}: {out}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fx(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn binary_prints_templates() {
    let output = Command::new(env!("CARGO_BIN_EXE_regard-audit")).arg("templates").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 60);
    assert!(text.lines().all(|l| l.split('\t').count() == 2));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["stats"]).0, 1, "stats without inputs is a usage error");
    assert_eq!(run(&["audit", "--scorer", "sentiment_baseline", "--out-dir", "x"]).0, 1);
    assert_eq!(run(&["stats", "--raw", "/no/such/file.tsv"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "sample_id\tannotator_id\tsentiment_category\tregard_category\ttimestamp\nx\ta1\tgreat\tpositive\t1\n")
        .unwrap();
    let (code, _, err) = run(&["stats", "--raw", p(&bad)]);
    assert_eq!(code, 2);
    assert!(err.contains("great"), "{err}");
}

#[test]
fn stats_reports_reference_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("batch.jsonl");
    let gold = dir.path().join("gold.tsv");
    run_ok(&["ingest", "--input", &fx("batch_generations.tsv"), "--out", p(&archive)]);
    run_ok(&["gold", "--raw", &fx("raw_annotations.tsv"), "--batch", p(&archive), "--out", p(&gold)]);

    let v = run_ok(&["stats", "--raw", &fx("raw_annotations.tsv"), "--gold", p(&gold), "--predictions", &fx("sentiment_predictions.tsv")]);
    let rows = v["rows"].as_array().unwrap();
    let find = |metric: &str, subset: &str| {
        rows.iter()
            .find(|r| r["metric"] == metric && r["subset"] == subset)
            .unwrap_or_else(|| panic!("no row {metric}/{subset}"))["value"]
            .as_f64()
            .unwrap()
    };
    assert!((find("sentiment ann. vs. regard ann.", "respect") - expected_f64("gold_respect")).abs() < 1e-9);
    assert!((find("fleiss_kappa.regard", "original_categories") - expected_f64("kappa_orig_regard")).abs() < 1e-9);
    assert!(v["config_digest"].as_str().unwrap().len() == 64);

    let (code, table, _) = run(&["--pretty", "stats", "--gold", p(&gold)]);
    assert_eq!(code, 0);
    assert!(table.contains("sentiment ann. vs. regard ann."), "{table}");
    assert!(table.contains("config digest:"));
}

#[test]
fn audit_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("audit");
    let args = ["--seed", "7", "audit", "--generations", &fx("batch_generations.tsv"), "--scorer", "sentiment_baseline", "--out-dir", p(&out_dir)];
    let first = run_ok(&args);
    let files: Vec<String> = first["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).collect();
    assert!(files.contains(&"report.json".to_string()));
    assert!(files.contains(&"distributions.csv".to_string()));
    assert!(files.iter().any(|f| f.starts_with("chart-") && f.ends_with(".svg")));
    let snapshot: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(out_dir.join(f)).unwrap()).collect();

    for f in &files {
        let meta: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join(format!("{f}.meta.json"))).unwrap()).unwrap();
        assert_eq!(meta["config_digest"], first["config_digest"]);
        assert_eq!(meta["seed"], 7);
    }
    let svg = std::fs::read_to_string(out_dir.join(files.iter().find(|f| f.ends_with(".svg")).unwrap())).unwrap();
    assert!(svg.contains(&format!("config_digest={}", first["config_digest"].as_str().unwrap())));

    let csv = std::fs::read_to_string(out_dir.join("distributions.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let cols: Vec<usize> = ["negative", "neutral", "positive"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let sum: f64 = cols.iter().map(|&c| f[c].parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{line}");
    }

    run_ok(&args);
    for (f, bytes) in files.iter().zip(&snapshot) {
        assert_eq!(&std::fs::read(out_dir.join(f)).unwrap(), bytes, "{f} changed between runs");
    }

    let summary = run_ok(&["report", "--input", p(&out_dir.join("report.json"))]);
    assert!(summary["gaps"].as_array().is_some_and(|g| !g.is_empty()));
}

#[test]
fn annotation_to_evaluation_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("corpus.jsonl");
    let batch = dir.path().join("batch.jsonl");
    let gold = dir.path().join("gold.tsv");
    let model = dir.path().join("model.json");

    let v = run_ok(&["ingest", "--input", &fx("batch_generations.tsv"), "--out", p(&archive)]);
    assert_eq!(v["samples"], 360);
    assert!(dir.path().join("corpus.jsonl.meta.json").exists());

    let (code, out, _) = run(&["select-batch", "--archive", p(&archive), "--out", p(&batch)]);
    assert_eq!(code, 0);
    let sel: Value = serde_json::from_str(&out).unwrap();
    assert!(sel["members"].as_u64().unwrap() <= 360);

    let v = run_ok(&["gold", "--raw", &fx("raw_annotations.tsv"), "--batch", p(&archive), "--out", p(&gold)]);
    assert_eq!(v["gold"].as_f64().unwrap(), expected_f64("gold_count"));

    let v = run_ok(&["train", "--gold", p(&gold), "--split", &fx("split_assignment.tsv"), "--out", p(&model)]);
    assert_eq!(v["split_sizes"], serde_json::json!([212, 60, 30]));

    let trained = run_ok(&["eval", "--gold", p(&gold), "--split", &fx("split_assignment.tsv"), "--scorer", "trained", "--model", p(&model), "--runs", "1"]);
    let baseline = run_ok(&["eval", "--gold", p(&gold), "--split", &fx("split_assignment.tsv"), "--scorer", "sentiment_baseline", "--runs", "1"]);
    let acc = |v: &Value| v["mean_accuracy"].as_f64().unwrap();
    assert!(acc(&trained) > acc(&baseline), "trained {} vs baseline {}", acc(&trained), acc(&baseline));
}
