use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn ptoh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptoh"))
        .args(args)
        .env_remove("HANOI_VERTEX_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = ptoh(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let line = String::from_utf8_lossy(&out.stderr);
    let line = line.lines().last().unwrap_or_default();
    let value: Value = serde_json::from_str(line).expect("structured error");
    value["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn enumerate_counts() {
    assert_eq!(
        stdout(&["enumerate", "--t", "2", "--n", "1", "--p", "4"]),
        "12\n"
    );
    assert_eq!(
        stdout(&["enumerate", "--t", "1", "--n", "1", "--p", "3"]),
        "3\n"
    );
    assert_eq!(
        stdout(&["enumerate", "--t", "1", "--n", "3", "--p", "3"]),
        "27\n"
    );
    let listed = stdout(&["enumerate", "--t", "1", "--n", "2", "--p", "3", "--list"]);
    let lines: Vec<_> = listed.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0 0");
}

#[test]
fn enumerate_respects_cap() {
    let out = ptoh(&[
        "--cap",
        "10",
        "enumerate",
        "--t",
        "1",
        "--n",
        "3",
        "--p",
        "3",
        "--list",
    ]);
    assert_eq!(error_kind(&out), "CapExceeded");
    let out = Command::new(env!("CARGO_BIN_EXE_ptoh"))
        .args(["export-dot", "--t", "1", "--n", "3", "--p", "3"])
        .env("HANOI_VERTEX_CAP", "20")
        .output()
        .unwrap();
    assert_eq!(error_kind(&out), "CapExceeded");
}

#[test]
fn neighbors_list_tgec() {
    let out = stdout(&["neighbors", "--p", "4", "0; 1"]);
    assert_eq!(out.lines().count(), 11);
    assert!(out.lines().any(|l| l == "1; 0\t2"));
    let single = stdout(&["neighbors", "--p", "3", "0 0"]);
    assert_eq!(single, "0 1\t1\n0 2\t1\n");
}

#[test]
fn distances() {
    assert_eq!(stdout(&["dist", "--p", "3", "0 0", "1 1"]), "3\n");
    assert_eq!(
        stdout(&["dist", "--p", "4", "0; 1", "2; 3", "--measure", "steps"]),
        "1\n"
    );
    assert_eq!(stdout(&["dist", "--p", "4", "0; 1", "2; 3"]), "2\n");
    assert_eq!(
        stdout(&[
            "dist",
            "--p",
            "3",
            "0 0 0",
            "0 1 1",
            "--within-cluster",
            "1"
        ]),
        "3\n"
    );
    let out = ptoh(&[
        "dist",
        "--p",
        "3",
        "0 0 0",
        "1 1 1",
        "--within-cluster",
        "1",
    ]);
    assert_eq!(error_kind(&out), "NotMember");
}

#[test]
fn denoise_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("walk.txt");
    let report = dir.path().join("report.jsonl");
    fs::write(&input, "# detour\n0 0\n0 1\n2 1\n2 0\n\n1 0\n").unwrap();
    let out = stdout(&[
        "denoise",
        "--p",
        "3",
        input.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    let body: Vec<_> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, ["0 0", "0 2", "1 2", "1 0"]);
    let log = fs::read_to_string(&report).unwrap();
    let record: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(record["before"], 4);
    assert_eq!(record["after"], 3);
    assert_eq!(record["kind"], "detour_forward");
}

#[test]
fn denoise_leaves_minimal_walks() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("walk.txt");
    fs::write(&input, "0 0\n0 0\n0 2\n1 2\n1 0\n").unwrap();
    let out = stdout(&["denoise", "--p", "3", input.to_str().unwrap()]);
    let body: Vec<_> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, ["0 0", "0 2", "1 2", "1 0"]);
    fs::write(&input, "2 1\n2 1\n").unwrap();
    let out = stdout(&["denoise", "--p", "3", input.to_str().unwrap()]);
    assert!(out.ends_with("rewrites 0\n2 1\n"));
}

#[test]
fn denoise_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("walk.txt");
    fs::write(&input, "0 0\n1 1\n").unwrap();
    assert_eq!(
        error_kind(&ptoh(&["denoise", "--p", "3", input.to_str().unwrap()])),
        "InvalidSequence"
    );
    fs::write(&input, "0 x\n").unwrap();
    assert_eq!(
        error_kind(&ptoh(&["denoise", "--p", "3", input.to_str().unwrap()])),
        "ParseError"
    );
    fs::write(&input, "# nothing\n").unwrap();
    assert_eq!(
        error_kind(&ptoh(&["denoise", "--p", "3", input.to_str().unwrap()])),
        "EmptySequence"
    );
    let missing = dir.path().join("missing.txt");
    assert_eq!(
        error_kind(&ptoh(&["denoise", "--p", "3", missing.to_str().unwrap()])),
        "IoError"
    );
}

#[test]
fn random_walk_is_reproducible() {
    let args = [
        "random-walk",
        "--t",
        "2",
        "--n",
        "2",
        "--p",
        "4",
        "--length",
        "25",
        "--seed",
        "9",
    ];
    let first = stdout(&args);
    assert_eq!(first, stdout(&args));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.txt");
    fs::write(&path, &first).unwrap();
    let out = stdout(&["denoise", "--p", "4", path.to_str().unwrap()]);
    assert!(out.starts_with("# transfers"));
    let one = stdout(&[
        "random-walk",
        "--t",
        "1",
        "--n",
        "2",
        "--p",
        "3",
        "--length",
        "1",
        "--start",
        "2 1",
    ]);
    assert!(one.ends_with("\n2 1\n"));
}

#[test]
fn export_dot_complete_graph() {
    let dot = stdout(&["export-dot", "--t", "2", "--n", "1", "--p", "4"]);
    assert_eq!(dot.lines().filter(|l| l.contains("label=")).count(), 12);
    assert_eq!(dot.lines().filter(|l| l.contains(" -- ")).count(), 66);
    for line in dot.lines().filter(|l| l.contains("label=")) {
        let label = line.split('"').nth(1).unwrap();
        assert_eq!(
            stdout(&["neighbors", "--p", "4", label]).lines().count(),
            11
        );
    }
    let jsonl = stdout(&[
        "export-dot",
        "--t",
        "1",
        "--n",
        "1",
        "--p",
        "3",
        "--format",
        "jsonl",
    ]);
    assert_eq!(jsonl.lines().count(), 3);
}

#[test]
fn qlearn_curve() {
    let args = ["qlearn", "--n", "3", "--episodes", "400", "--seed", "4"];
    let csv = stdout(&args);
    assert_eq!(csv, stdout(&args));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("episode,time_s,mse,greedy_len"));
    let last: Vec<_> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "400");
    assert_eq!(last[3], "7");
    assert_eq!(
        stdout(&["qlearn", "--episodes", "0"]),
        "episode,time_s,mse,greedy_len\n"
    );
}

#[test]
fn qlearn_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("learn.json");
    fs::write(
        &path,
        r#"{"t":1,"n":2,"p":3,"episodes":5,"seed":2,"denoise":true,"precision":"f32","action_space":"full_parallel"}"#,
    )
    .unwrap();
    let csv = stdout(&["qlearn", "--config", path.to_str().unwrap()]);
    assert_eq!(csv.lines().count(), 6);
    let csv = stdout(&[
        "qlearn",
        "--config",
        path.to_str().unwrap(),
        "--episodes",
        "2",
    ]);
    assert_eq!(csv.lines().count(), 3);

    fs::write(&path, r#"{"episodes":5,"gamma":0.5}"#).unwrap();
    assert_eq!(
        error_kind(&ptoh(&["qlearn", "--config", path.to_str().unwrap()])),
        "InvalidConfig"
    );
    assert_eq!(
        error_kind(&ptoh(&["qlearn", "--learning-rate", "1.5"])),
        "InvalidConfig"
    );
    assert_eq!(
        error_kind(&ptoh(&["qlearn", "--t", "2", "--n", "1", "--p", "4"])),
        "InvalidConfig"
    );
}

#[test]
fn invalid_input_is_structured() {
    assert_eq!(
        error_kind(&ptoh(&["enumerate", "--t", "3", "--n", "1", "--p", "2"])),
        "InvalidParams"
    );
    assert_eq!(
        error_kind(&ptoh(&["dist", "--p", "3", "0 0", "0 9"])),
        "PostOutOfRange"
    );
    assert_eq!(
        error_kind(&ptoh(&["dist", "--p", "3", "0 0", "1"])),
        "ParamsMismatch"
    );
    assert_eq!(
        error_kind(&ptoh(&["neighbors", "--p", "4", "0; 0"])),
        "ColumnCollision"
    );
    let out = ptoh(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "Usage");
}

#[test]
fn warns_outside_standard_regime() {
    let out = ptoh(&["enumerate", "--t", "2", "--n", "1", "--p", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let out = ptoh(&["enumerate", "--t", "1", "--n", "1", "--p", "3"]);
    assert!(out.stderr.is_empty());
}
