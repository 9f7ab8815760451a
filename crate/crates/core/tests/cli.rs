//! End-to-end runs of the `cyclecover` binary: outputs, exit codes, replay.

use std::path::Path;
use std::process::{Command, Output};

use cyclecover::graph::{read_edge_list, validate_cycle_cover, Cycle, CycleCover};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclecover"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_then_cover_produces_a_valid_cover() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(dir.path(), &["gen", "--n", "40", "--p", "0.5", "--seed", "3"]);
    assert_eq!(gen.status.code(), Some(0));
    let graph_file = dir.path().join("graph.txt");
    let g = read_edge_list(&graph_file).unwrap();
    assert_eq!(g.n(), 40);

    let out = run(dir.path(), &["cover", "--graph", graph_file.to_str().unwrap(), "--k", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let cycles: Vec<Vec<usize>> = serde_json::from_value(v["cycles"].clone()).unwrap();
    let cover = CycleCover { cycles: cycles.into_iter().map(Cycle).collect(), k: 3 };
    assert!(validate_cycle_cover(&g, &cover).pass);
    assert!(dir.path().join("cover.json").exists());
}

#[test]
fn usage_and_precondition_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"version":1,"bogus":2}"#).unwrap();
    let out = run(dir.path(), &["resilience-experiment", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let graph = dir.path().join("k4.txt");
    std::fs::write(&graph, "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let out = run(dir.path(), &["cover", "--graph", graph.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["cover", "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn uncoverable_graph_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.txt");
    std::fs::write(&graph, "3 2\n0 1\n1 2\n").unwrap();
    let out = run(dir.path(), &["cover", "--graph", graph.to_str().unwrap(), "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn replay_matches_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["resilience-experiment", "--name", "e", "--n", "60", "--p", "0.4", "--trials", "2", "--k", "2"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let exp = dir.path().join("e");
    for f in ["spec.json", "report.json", "points.csv", "timings.json"] {
        assert!(exp.join(f).exists(), "{f} missing");
    }

    let out = run(dir.path(), &["replay", exp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["identical"], serde_json::Value::Bool(true));

    let report = exp.join("report.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    v["success_rate"] = serde_json::json!(0.123);
    std::fs::write(&report, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = run(dir.path(), &["replay", exp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
