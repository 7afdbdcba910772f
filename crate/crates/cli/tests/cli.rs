use std::path::Path;
use std::process::Command;

fn amrsched(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_amrsched"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

#[test]
fn generate_solve_validate_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(amrsched(d, &["generate", "--robots", "2", "--tasks", "4", "--seed", "5", "--out", "i.json"]).0, 0);
    let (code, text) = amrsched(d, &["solve", "i.json", "--method", "rule", "--out", "s.json"]);
    assert_eq!(code, 0, "{text}");
    let (code, text) = amrsched(d, &["validate", "i.json", "s.json"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.starts_with("clean"));
    let (code, _) = amrsched(d, &["report", "s.json", "--format", "svg", "--instance", "i.json", "--out", "soc.svg"]);
    assert_eq!(code, 0);
    assert!(std::fs::read_to_string(d.join("soc.svg")).unwrap().contains("<polyline"));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.json", "b.json"] {
        amrsched(d, &["generate", "--seed", "9", "--out", name]);
    }
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}

#[test]
fn broken_schedule_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    amrsched(d, &["generate", "--robots", "1", "--tasks", "2", "--seed", "1", "--out", "i.json"]);
    amrsched(d, &["solve", "i.json", "--method", "rule", "--out", "s.json"]);
    let text = std::fs::read_to_string(d.join("s.json")).unwrap();
    // Move the first recorded start to time zero, before any release.
    let mut v: Vec<&str> = text.lines().collect();
    let pos = v.iter().position(|l| l.trim_start().starts_with("\"start\"")).unwrap();
    let line = "      \"start\": 0.0,";
    assert_ne!(v[pos].trim(), line.trim());
    v[pos] = line;
    std::fs::write(d.join("bad.json"), v.join("\n")).unwrap();
    let (code, text) = amrsched(d, &["validate", "i.json", "bad.json"]);
    assert_eq!(code, 1, "{text}");
}

#[test]
fn usage_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(amrsched(dir.path(), &["frobnicate"]).0, 3);
    assert_eq!(amrsched(dir.path(), &["solve", "missing.json"]).0, 3);
    assert_eq!(amrsched(dir.path(), &["solve", "x.json", "--method", "greedy"]).0, 3);
}

#[test]
fn suite_writes_csv_and_report_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = r#"{"schema_version": 1, "families": [{"robots": 2, "tasks": 3, "chargers": 1}],
        "seeds": [0, 1], "methods": ["rule", "matheuristic"]}"#;
    std::fs::write(d.join("spec.json"), spec).unwrap();
    let (code, text) = amrsched(d, &["suite", "--spec", "spec.json", "--time-limit", "60", "--out", "res"]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(d.join("res/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let (code, again) = amrsched(d, &["report", "res/results.json", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(again, csv);
}
