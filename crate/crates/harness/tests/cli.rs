mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tabletop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabletop")).current_dir(dir).args(args).output().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn unknown_subcommand_is_an_argument_error() {
    let d = tempfile::tempdir().unwrap();
    let o = tabletop(d.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["code"], "usage_error");
}

#[test]
fn bad_flag_values_are_argument_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(tabletop(d.path(), &["run", "--episodes", "0"]).status.code(), Some(2));
    assert_eq!(tabletop(d.path(), &["run", "--policy", "builtin:nobody"]).status.code(), Some(2));
    assert_eq!(tabletop(d.path(), &["run", "--fidelity", "blurry"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(tabletop(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn gen_matches_golden_fixture_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = tabletop(d.path(), &["gen", "--template", "coffee", "--n", "1", "--seed", "7", "--source", "fixture", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let golden = common::crate_dir().join("tests/golden/gen");
    for rel in ["scenarios/coffee/7.scenario.json", "bases/coffee.variation.json"] {
        let actual = std::fs::read_to_string(d.path().join("o").join(rel)).unwrap();
        common::check_golden(&golden.join(rel), &actual);
    }
}

#[test]
fn missing_fixture_is_an_operation_error() {
    let d = tempfile::tempdir().unwrap();
    let o = tabletop(d.path(), &["gen", "--template", "coffee", "--seed", "8", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["code"], "source_error");
}

#[test]
fn perturb_needs_every_base_the_suite_names() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(tabletop(d.path(), &["gen", "--template", "coffee", "--out", "o"]).status.code(), Some(0));
    let o = tabletop(d.path(), &["perturb", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["code"], "precondition");
}

#[test]
fn unreachable_tcp_policy_exits_with_handshake_failed() {
    let d = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let o = tabletop(d.path(), &["gen", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(tabletop(d.path(), &["perturb", "--out", "o"]).status.code(), Some(0));
    let policy = format!("tcp:127.0.0.1:{port}");
    let o = tabletop(d.path(), &["run", "--out", "o", "--policy", &policy, "--only", "coffee", "--episodes", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["code"], "handshake_failed");
}

#[test]
fn config_file_overrides_constants() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.toml"), "max_steps = 0\n").unwrap();
    std::fs::write(d.path().join("bad.toml"), "max_stepz = 3\n").unwrap();
    assert_eq!(tabletop(d.path(), &["gen", "--out", "o"]).status.code(), Some(0));
    assert_eq!(tabletop(d.path(), &["perturb", "--out", "o"]).status.code(), Some(0));
    let o = tabletop(d.path(), &["--config", "c.toml", "run", "--out", "o", "--only", "coffee", "--episodes", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(d.path().join("o/runs/default/oracle/coffee/7.episode.jsonl")).unwrap();
    let end: Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(end["reason"], "timeout");
    let o = tabletop(d.path(), &["--config", "bad.toml", "run", "--out", "o", "--only", "coffee"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["code"], "config_error");
}

#[test]
fn every_stage_writes_its_outputs() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["gen", "--out", "o"][..],
        &["perturb", "--out", "o"],
        &["run", "--out", "o", "--episodes", "1", "--jobs", "2", "--only", "fruit", "--only", "tidy"],
        &["vqa", "--out", "o"],
        &["report", "--out", "o"],
        &["amplify", "--out", "o", "--variation", "tidy", "--layouts", "2"],
    ] {
        let o = tabletop(d.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = d.path().join("o");
    for rel in [
        "suite.manifest.json",
        "runs/default/oracle/fruit/7.episode.jsonl",
        "runs/default/oracle/tidy/7.vqa.jsonl",
        "reports/default.report.json",
        "reports/default.report.txt",
        "reports/default.variations.csv",
        "demos/tidy/source.demo.json",
        "demos/tidy/1.demo.json",
        "demos/amplify.summary.json",
    ] {
        assert!(o.join(rel).is_file(), "{rel} missing");
    }
    let leftovers = std::fs::read_dir(o.join("runs/default/oracle/fruit")).unwrap().filter(|e| {
        e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp")
    });
    assert_eq!(leftovers.count(), 0);
}
