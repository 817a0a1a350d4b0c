//! Runs the built binary: state written by one process must be visible to the next.

use std::path::Path;
use std::process::{Command, Output};

use classdist::aggregate::parse_csv;
use classdist::{Classroom, Store};

fn classdist(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_classdist"))
        .arg("--store")
        .arg(store)
        .args(args)
        .env_remove("CLASSDIST_STORE")
        .env_remove("CLASSDIST_PORT")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn create(store: &Path, extra: &[&str]) -> String {
    let mut args = vec!["create", "--session-key", "cli-test"];
    args.extend_from_slice(extra);
    let v: serde_json::Value = serde_json::from_str(&ok(classdist(store, &args))).unwrap();
    v["session_id"].as_str().unwrap().to_owned()
}

#[test]
fn simulate_then_export_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("class.jsonl");
    let id = create(&store, &[]);

    let sessions = ok(classdist(&store, &["sessions"]));
    assert_eq!(sessions.trim(), id);

    ok(classdist(&store, &["simulate", "--session", &id, "--students", "80", "--seed", "7"]));
    let csv_path = dir.path().join("out.csv");
    ok(classdist(&store, &["export", "--session", &id, "--out", csv_path.to_str().unwrap()]));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 240);
    assert!(text.ends_with('\n') && !text.contains('\r'));

    let table = ok(classdist(&store, &["summary", "--session", &id, "--estimator", "mean", "--n", "100"]));
    assert!(table.contains("80"), "{table}");
    let json = ok(classdist(
        &store,
        &["summary", "--session", &id, "--estimator", "median", "--n", "5", "--format", "json"],
    ));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["submission_count"], 80);
    assert_eq!(v["estimates"].as_array().unwrap().len(), 80);
}

#[test]
fn datasets_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("class.jsonl");
    let id = create(&store, &["--family", "log-normal", "--params", "1,0.5", "--sizes", "4,40"]);

    let reopened = Classroom::new(Store::open_read_only(&store).unwrap());
    let first = reopened.assign_dataset(&id, "stu", 40).unwrap();
    drop(reopened);
    let again = Classroom::new(Store::open_read_only(&store).unwrap());
    let second = again.assign_dataset(&id, "stu", 40).unwrap();
    assert_eq!(
        first.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        second.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    let short = again.assign_dataset(&id, "stu", 4).unwrap();
    assert_eq!(short.values[..], first.values[..4]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("class.jsonl");

    let bad = classdist(&store, &["create", "--tolerance", "-1"]);
    assert_eq!(bad.status.code(), Some(2), "{}", String::from_utf8_lossy(&bad.stderr));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("tolerance"));

    let id = create(&store, &[]);
    let missing = classdist(&store, &["summary", "--session", "nope", "--estimator", "mean", "--n", "5"]);
    assert_eq!(missing.status.code(), Some(3));
    let empty = classdist(&store, &["summary", "--session", &id, "--estimator", "mean", "--n", "5"]);
    assert_eq!(empty.status.code(), Some(3), "{}", String::from_utf8_lossy(&empty.stderr));

    let unwritable = dir.path().join("no/such/dir/out.csv");
    let io = classdist(&store, &["export", "--session", &id, "--out", unwritable.to_str().unwrap()]);
    assert_eq!(io.status.code(), Some(4));

    let absent = dir.path().join("absent.jsonl");
    let io = classdist(&absent, &["export", "--session", &id, "--out", "x.csv"]);
    assert_ne!(io.status.code(), Some(0));

    let usage = classdist(&store, &["summary", "--session", &id]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn vectors_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("vectors.json");
    let store = dir.path().join("unused.jsonl");
    ok(classdist(&store, &["vectors", "--out", file.to_str().unwrap()]));
    ok(classdist(&store, &["vectors", "--check", file.to_str().unwrap()]));

    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let first = &mut doc[0]["values"][0];
    *first = serde_json::json!(first.as_f64().unwrap() * 1.000_000_1);
    std::fs::write(&file, doc.to_string()).unwrap();
    let out = classdist(&store, &["vectors", "--check", file.to_str().unwrap()]);
    assert!(!out.status.success());
}
