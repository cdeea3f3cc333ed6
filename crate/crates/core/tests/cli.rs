use std::path::Path;
use std::process::{Command, Output};

use collusion_kit::corpus::{inspection_stats, TweetStore};
use serde_json::Value;

fn kit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collusion-kit"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = kit(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const DATA: [&str; 4] = ["--corpus", "d/corpus", "--labels", "d/labels.csv"];

fn with_data<'a>(rest: &[&'a str]) -> Vec<&'a str> {
    let mut v: Vec<&str> = vec!["--out", "d"];
    v.extend(DATA);
    v.extend_from_slice(rest);
    v
}

fn synth(dir: &Path) {
    ok(
        dir,
        &[
            "--out",
            "d",
            "--seed",
            "3",
            "synth",
            "--organized",
            "8",
            "--organic",
            "8",
        ],
    );
}

#[test]
fn synth_trainset_eval_smoke_path() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(dir, &with_data(&["--folds", "4", "trainset"]));
    ok(dir, &["--out", "d", "--folds", "4", "eval"]);
    let report = read_json(&dir.join("d/report.json"));
    assert_eq!(report["model"], "rf");
    assert_eq!(report["n"], 16);
    assert!(report["pooled"]["accuracy"].as_f64().unwrap() > 0.8);
    assert!(std::fs::read_to_string(dir.join("d/report.txt"))
        .unwrap()
        .contains("Random Forest"));
    let run = read_json(&dir.join("d/run_config.json"));
    assert_eq!(run["command"], "eval");
    assert_eq!(run["config"]["seed"], 42);
}

#[test]
fn eval_refuses_model_from_other_trainset() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(dir, &with_data(&["trainset"]));
    ok(dir, &["--out", "d", "--model", "logreg", "train"]);
    ok(dir, &["--out", "d", "eval", "--model-file", "d/model.ckm"]);
    assert!(dir.join("d/score_report.json").exists());

    ok(dir, &with_data(&["--variant", "no-traced", "trainset"]));
    let out = kit(dir, &["--out", "d", "eval", "--model-file", "d/model.ckm"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"error\":\"schema_mismatch\""), "{stderr}");
    assert_eq!(out.status.code(), Some(16));
}

#[test]
fn inspect_matches_library_call() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(
        dir,
        &with_data(&["--hashtag", "synorg0", "--hashtag", "synnat0", "inspect"]),
    );
    let lines = read_json(&dir.join("d/inspect.json"));
    let store = TweetStore::load(dir.join("d/corpus")).unwrap();
    for line in lines.as_array().unwrap() {
        let tag = line["hashtag"].as_str().unwrap();
        let want = inspection_stats(store.with_hashtag(tag)).unwrap();
        let got: collusion_kit::corpus::InspectionStats =
            serde_json::from_value(line.clone()).unwrap();
        assert_eq!(got, want, "{tag}");
    }
}

#[test]
fn rerun_from_logged_config_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(dir, &with_data(&["--interval-mins", "30", "features"]));
    let first = std::fs::read(dir.join("d/features.csv")).unwrap();
    let first_schema = std::fs::read(dir.join("d/schema.json")).unwrap();
    std::fs::rename(dir.join("d/run_config.json"), dir.join("logged.json")).unwrap();
    std::fs::remove_file(dir.join("d/features.csv")).unwrap();
    ok(dir, &["--config", "logged.json", "features"]);
    assert_eq!(std::fs::read(dir.join("d/features.csv")).unwrap(), first);
    assert_eq!(
        std::fs::read(dir.join("d/schema.json")).unwrap(),
        first_schema
    );
    assert_eq!(
        read_json(&dir.join("d/run_config.json"))["config"]["interval_mins"],
        30
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(dir, &with_data(&["trainset"]));
    ok(dir, &["--out", "d", "--folds", "4", "eval"]);
    let many = std::fs::read(dir.join("d/report.json")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_collusion-kit"))
        .current_dir(dir)
        .env("COLLUSION_KIT_THREADS", "1")
        .args(["--out", "d", "--folds", "4", "eval"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(dir.join("d/report.json")).unwrap(), many);

    let bad = Command::new(env!("CARGO_BIN_EXE_collusion-kit"))
        .current_dir(dir)
        .env("COLLUSION_KIT_THREADS", "zero")
        .args(["--out", "d", "eval"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn remaining_commands_write_their_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(dir, &with_data(&["features", "--histograms"]));
    for f in [
        "follower_degree.csv",
        "follower_degree.svg",
        "registration_year.csv",
    ] {
        assert!(dir.join("d/histograms").join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.join("d/histograms/follower_degree.csv")).unwrap();
    assert!(csv.starts_with("bucket,organized,organic"));

    ok(dir, &with_data(&["collect"]));
    assert_eq!(
        read_json(&dir.join("d/collections.json"))
            .as_array()
            .unwrap()
            .len(),
        16
    );

    ok(
        dir,
        &with_data(&["--hashtag", "synorg0", "--hashtag", "synorg1", "overlap"]),
    );
    let overlap = read_json(&dir.join("d/overlap.json"));
    assert_eq!(overlap.as_array().unwrap().len(), 2);

    ok(
        dir,
        &["--out", "d", "trainset", "--features", "d/features.csv"],
    );
    ok(dir, &["--out", "d", "rank", "--top-k", "3"]);
    let ranking = read_json(&dir.join("d/ranking.json"));
    assert!(ranking["features"].as_array().unwrap().len() <= 3);
}

#[test]
fn bad_invocations_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert!(!kit(dir, &["frobnicate"]).status.success());
    assert!(!kit(dir, &["--task", "nope", "collect"]).status.success());
    let out = kit(dir, &["--out", "d", "collect"]);
    assert_eq!(out.status.code(), Some(13));
    std::fs::write(dir.join("c.toml"), "not_a_key = 1\n").unwrap();
    assert!(!kit(dir, &["--config", "c.toml", "collect"])
        .status
        .success());
}
