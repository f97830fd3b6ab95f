use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nasbo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nasbo")).args(args).current_dir(dir).output().expect("spawn nasbo")
}

fn with_table(n: &str, m: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = nasbo(dir.path(), &["synth", "--seed", "1", "--n", n, "--m", m, "--out", "t"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn synth_writes_table_and_spearman() {
    let dir = with_table("4096", "6");
    let rows = csv_rows(&dir.path().join("t/synth_seed1.csv"));
    assert_eq!(rows.len(), 4096);
    let header = csv::Reader::from_path(dir.path().join("t/synth_seed1.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(&header[0], "arch_id");
    assert_eq!(&header[1], "genome");
    assert_eq!(header.iter().filter(|h| h.starts_with('m')).count(), 6);

    let again = nasbo(dir.path(), &["synth", "--seed", "1", "--n", "4096", "--m", "6", "--out", "u"]);
    assert!(again.status.success());
    assert_eq!(fs::read(dir.path().join("t/synth_seed1.csv")).unwrap(), fs::read(dir.path().join("u/synth_seed1.csv")).unwrap());
    let stdout = String::from_utf8(again.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("m0,")));
}

#[test]
fn synth_rejects_zero_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = nasbo(dir.path(), &["synth", "--m", "0", "--out", "t"]);
    assert!(!out.status.success());
}

#[test]
fn search_file_contract() {
    let dir = with_table("500", "3");
    let out = nasbo(dir.path(), &["search", "--benchmark", "t/synth_seed1.csv", "--budget", "40", "--seeds", "0..9", "--out", "s"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for seed in 0..10 {
        let trace = fs::read_to_string(dir.path().join(format!("s/trace_seed{seed}.jsonl"))).unwrap();
        let lines: Vec<serde_json::Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 40 + 2);
        assert!(lines[0].get("w").is_some());
        assert!(lines[40].get("T0").is_some());
        assert_eq!(lines[41]["method"], "hybrid");
    }
    let rows = csv_rows(&dir.path().join("s/summary.csv"));
    assert_eq!(rows.len(), 11);
    assert_eq!(&rows[10][2], "aggregate");
    assert!(rows[10][7].parse::<f64>().unwrap() >= 0.0);
    assert!(dir.path().join("s/curves.csv").exists());
}

#[test]
fn missing_budget_is_usage_error() {
    let dir = with_table("100", "2");
    let out = nasbo(dir.path(), &["search", "--benchmark", "t/synth_seed1.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nasbo(dir.path(), &["search", "--budget", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nasbo(dir.path(), &["search", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn baseline_contracts() {
    let dir = with_table("300", "2");
    let out = nasbo(dir.path(), &["baseline", "--benchmark", "t/synth_seed1.csv", "--method", "rea", "--budget", "2", "--out", "b"]);
    assert_eq!(out.status.code(), Some(1));
    let out = nasbo(dir.path(), &["baseline", "--benchmark", "t/synth_seed1.csv", "--method", "sgd", "--budget", "20", "--out", "b"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nasbo(
        dir.path(),
        &["baseline", "--benchmark", "t/synth_seed1.csv", "--method", "reinforce", "--lr", "0", "--budget", "20", "--seeds", "0..4", "--out", "b"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&dir.path().join("b/summary.csv")).len(), 6);
    assert!(dir.path().join("b/trace_reinforce_seed4.jsonl").exists());

    let out = nasbo(dir.path(), &["baseline", "--benchmark", "t/synth_seed1.csv", "--method", "rs", "--budget", "30", "--seeds", "0..49", "--out", "rs"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&dir.path().join("rs/summary.csv")).len(), 51);
}

#[test]
fn analyze_reports() {
    let dir = with_table("800", "4");
    let out = nasbo(dir.path(), &["analyze", "--benchmark", "t/synth_seed1.csv", "--budget", "100", "--out", "a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("a/precision.csv"));
    let precision = |name: &str| -> f64 {
        rows.iter().find(|r| &r[1] == name).map(|r| r[3].parse().unwrap()).unwrap()
    };
    assert_eq!(precision("objective"), 1.0);
    for m in ["m0", "m1", "m2", "m3"] {
        assert!(precision("optimal_sampled") >= precision(m));
    }
    let table1 = csv_rows(&dir.path().join("a/table1.csv"));
    assert!(table1.iter().any(|r| &r[1] == "m0" && r[5].parse::<usize>().unwrap() >= 1));

    let out = nasbo(dir.path(), &["analyze", "--benchmark", "t/synth_seed1.csv", "--budget", "10", "--weights", "nope.json", "--out", "a"]);
    assert_eq!(out.status.code(), Some(1));

    fs::write(dir.path().join("w.json"), r#"{"weights": [1.0, 0.5, 0.0, -0.2]}"#).unwrap();
    let out = nasbo(dir.path(), &["analyze", "--benchmark", "t/synth_seed1.csv", "--budget", "10", "--weights", "w.json", "--out", "a"]);
    assert!(out.status.success());
    assert!(csv_rows(&dir.path().join("a/precision.csv")).iter().any(|r| &r[1] == "learned"));
}

#[test]
fn config_file_and_ablations() {
    let dir = with_table("300", "3");
    fs::write(dir.path().join("run.toml"), "benchmark = \"t/synth_seed1.csv\"\nbudget = 15\nseeds = \"0..1\"\nout = \"c\"\n").unwrap();
    let out = nasbo(dir.path(), &["search", "--config", "run.toml", "--ablation", "rank_uniform", "--metrics", "m0,m2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("c/trace_seed0.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["w"].as_array().unwrap().len(), 2);

    let out = nasbo(dir.path(), &["search", "--config", "run.toml", "--fixed-t0", "5", "--spend-leftover", "--out", "d"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("d/summary.csv"));
    assert_eq!(&rows[0][4], "5");
    assert_eq!(&rows[0][12], "15");
}
