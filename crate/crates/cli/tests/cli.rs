use std::path::Path;
use std::process::{Command, Output};

fn stackel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stackel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic_and_feeds_baseline_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = stackel(&["gen", "--seed", "4", "--m", "2", "--n", "3", "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = stackel(&["baseline", path(&a)]);
    assert!(o.status.success());
    let baseline: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();

    let transcript = dir.path().join("t.jsonl");
    let o = stackel(&["run", "--game", path(&a), "--transcript", path(&transcript)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["value"], baseline["value"]);
    assert_eq!(plan["confirmed"], true);
    let lines = std::fs::read_to_string(&transcript).unwrap();
    assert!(lines.lines().count() > 0);
    for line in lines.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn run_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = stackel(&[
        "run", "--seed", "2", "--m", "1..3", "--n", "2", "--count", "4", "--structured", "--out",
        path(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = stackel(&["verify", path(&report), "--summary"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));

    let mut r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    r["instances"][2]["outcome"]["value"] = serde_json::Value::String("1000/1".into());
    std::fs::write(&report, serde_json::to_string(&r).unwrap()).unwrap();
    let o = stackel(&["verify", path(&report), "--summary"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("instance 2"));
}

#[test]
fn correspondence_mode_and_summary_table() {
    let o = stackel(&["run", "--seed", "9", "--m", "2", "--n", "2", "--count", "2", "--mode", "brc", "--summary"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("match rate 1/1"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    assert!(!stackel(&["verify", "/nonexistent/r.json"]).status.success());
    assert!(!stackel(&["run", "--m", "3..1"]).status.success());
    assert!(!stackel(&["gen", "--denom", "0"]).status.success());
}

#[test]
fn bench_prints_wall_time() {
    let o = stackel(&["bench", "--seed", "1", "--m", "2", "--n", "2", "--count", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wall time"));
}

#[test]
fn gen_structured_family_parses_as_game() {
    let o = stackel(&["gen", "--seed", "3", "--m", "3", "--n", "3", "--family", "constant-column"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(g["m"], 3);
}
