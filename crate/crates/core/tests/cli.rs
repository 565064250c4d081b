use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hedonia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hedonia"))
        .args(args)
        .env_remove("HEDONIA_SEED")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    format!("{}/examples/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> usize {
    table[0].iter().position(|h| h == name).unwrap()
}

#[test]
fn fig2_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonia(&["fig2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());

    let opt = rows(&dir.path().join("optimistic.csv"));
    assert_eq!(
        opt[0].join(","),
        "t,state,action,reward,happiness,payout,good_news,luck_payout,pessimism_payout,luck_news,pessimism_news"
    );
    assert_eq!(opt.len(), 101);
    let h = column(&opt, "happiness");
    assert_eq!(opt[1][h], "-1.05");
    assert_eq!(opt[2][h], "1.95");

    let pess = rows(&dir.path().join("pessimistic.csv"));
    let r = column(&pess, "reward");
    assert_eq!(pess.len(), 101);
    assert!(pess[1..].iter().all(|row| row[h] == "0" && row[r] == "0"));
}

#[test]
fn fig2_single_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonia(&["fig2", "--steps", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for file in ["optimistic.csv", "pessimistic.csv"] {
        assert_eq!(rows(&dir.path().join(file)).len(), 2);
    }
}

#[test]
fn fig2_unwritable_path_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let target = blocker.join("sub");
    let out = hedonia(&["fig2", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocker"));
}

fn report(dir: &Path, args: &[&str]) -> (Option<i32>, Value) {
    let path = dir.join("report.json");
    let mut all = vec!["verify"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = hedonia(&all);
    let json = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (out.status.code(), json)
}

#[test]
fn verify_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = report(dir.path(), &["--prop", "2", "--trials", "100", "--seed", "1"]);
    assert_eq!(code, Some(0));
    assert_eq!(json["pass"], true);
    assert!(json["max_deviation"].as_f64().unwrap() < 1e-9);

    let (code, json) = report(dir.path(), &["--prop", "3", "--trials", "100"]);
    assert_eq!(code, Some(0));
    assert!(json["max_deviation"].as_f64().unwrap() <= 1e-12);

    let (code, json) = report(dir.path(), &["--prop", "scaling"]);
    assert_eq!(code, Some(0));
    assert_eq!(json["pass"], true);

    let (code, json) = report(dir.path(), &["--prop", "sarsa"]);
    assert_eq!(code, Some(0));
    assert!(json["comparison"]["mean_q_learning"].as_f64().unwrap() < 0.0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hedonia(&["verify", "--prop", "7"]).status.code(), Some(2));
    assert_eq!(hedonia(&["fig2", "--bogus"]).status.code(), Some(2));
    assert_eq!(hedonia(&["rutledge", "--truth", "astrology"]).status.code(), Some(2));
    assert_eq!(hedonia(&[]).status.code(), Some(2));
}

#[test]
fn rutledge_without_subjects_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonia(&["rutledge", "--subjects", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("fits.csv")).unwrap(),
        "subject_id,model,gamma,r,r2,R2\n"
    );
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let entries = summary.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for e in entries {
        for key in ["model", "mean_r", "median_r2", "median_R2"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
        assert!(e["mean_r"].is_null());
    }
}

#[test]
fn rutledge_noiseless_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonia(&[
        "rutledge", "--subjects", "50", "--truth", "ours", "--noise", "0", "--seed", "5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let ours = summary
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["model"] == "ours")
        .unwrap();
    assert!(ours["mean_r"].as_f64().unwrap() > 0.999);
    let subjects = rows(&dir.path().join("subjects.csv"));
    assert_eq!(subjects[0].join(","), "subject_id,t,cr,lo,hi,choice,outcome,rating");
    assert_eq!(subjects.len(), 1 + 50 * 31);
}

#[test]
fn seed_from_environment_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(hedonia(&["rutledge", "--subjects", "5", "--noise", "0.3", "--seed", "11", "--out", a.to_str().unwrap()])
        .status
        .success());
    let status = Command::new(env!("CARGO_BIN_EXE_hedonia"))
        .args(["rutledge", "--subjects", "5", "--noise", "0.3", "--out", b.to_str().unwrap()])
        .env("HEDONIA_SEED", "11")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(a.join("subjects.csv")).unwrap(),
        std::fs::read(b.join("subjects.csv")).unwrap()
    );
}

#[test]
fn run_from_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = hedonia(&[
        "run", "--env", &data("chain.json"), "--config", &data("sarsa.json"), "--seed", "2", "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&trace);
    assert_eq!(table.len(), 501);
    assert!(table[1..].iter().all(|r| r.len() == 11 && !r[5].is_empty()));
}

#[test]
fn run_reports_missing_file() {
    let out = hedonia(&["run", "--env", "/nonexistent/env.json", "--config", &data("sarsa.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/env.json"));
}
