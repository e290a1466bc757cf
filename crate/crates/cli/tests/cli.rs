use std::path::{Path, PathBuf};
use std::process::Command;

use condexp_cli::schema::{
    build_selection, parse, CorrespondenceDoc, GameDoc, ProfileDoc, SelectionDoc, SpaceDoc, StepDoc,
};
use condexp_cli::{EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

struct Run {
    code: i32,
    report: Value,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_condexp")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    Run {
        code: out.status.code().unwrap(),
        report: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

fn reparse<T: serde::de::DeserializeOwned>(v: &Value) -> T {
    parse(&v.to_string()).unwrap()
}

#[test]
fn g_atom_reports_witness() {
    let r = run(&["g-atom", &path("saturated.json")]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.report["has_g_atom"], true);
    assert_eq!(r.report["witness"], "D");
    let r = run(&["g-atom", &path("rich.json")]);
    assert_eq!(r.report["has_g_atom"], false);
    assert!(r.report["witness"].is_null());
}

#[test]
fn convexify_round_trips() {
    let r = run(&["convexify", &path("rich_F01.json"), "--alpha", "1/4"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.report["identity_verified"], true);
    let input: CorrespondenceDoc = parse(&std::fs::read_to_string(fixture("rich_F01.json")).unwrap()).unwrap();
    let space = input.build().unwrap().space;
    let doc: SelectionDoc = reparse(&r.report["selection"]);
    build_selection(&space, &doc, "$").unwrap();
    let e: StepDoc = reparse(&r.report["conditional_expectation"]);
    e.build(&space, "$").unwrap();
}

#[test]
fn obstruction_is_a_certified_negative() {
    let r = run(&["convexify", &path("saturated_F01.json"), "--alpha", "1/2"]);
    assert_eq!(r.code, EXIT_NEGATIVE);
    assert_eq!(r.report["obstruction"]["cell"], "D");
    let r = run(&["condexp-set", &path("saturated_F01.json")]);
    assert_eq!(r.code, EXIT_NEGATIVE);
    assert_eq!(r.report["membership"]["member"], false);
    let r = run(&["coarser-check", &path("injective_game.json")]);
    assert_eq!(r.code, EXIT_NEGATIVE);
    assert_eq!(r.report["coarser"], false);
}

#[test]
fn solve_and_purify_round_trip() {
    let game: GameDoc = parse(&std::fs::read_to_string(fixture("pennies_game.json")).unwrap()).unwrap();
    let game = game.build().unwrap();
    let r = run(&["solve", &path("pennies_game.json")]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.report["converged"], true);
    let profile: ProfileDoc = reparse(&r.report["profile"]);
    profile.build(&game).unwrap();

    let r = run(&["purify", &path("pennies_game.json")]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.report["passes"], true);
    assert!(r.stderr.contains("belief consistency"));
    for (i, s) in r.report["pure"].as_array().unwrap().iter().enumerate() {
        let doc: SelectionDoc = reparse(s);
        build_selection(game.type_space(i), &doc, "$").unwrap();
    }
}

#[test]
fn derived_spaces_re_parse() {
    let r = run(&["derive-info", &path("injective_game.json")]);
    assert_eq!(r.code, EXIT_OK);
    for s in r.report["spaces"].as_array().unwrap() {
        let doc: SpaceDoc = reparse(s);
        doc.build("$").unwrap();
    }
}

#[test]
fn input_errors_carry_paths() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"cells": [{"id": "A", "mass": "one", "kind": "rich", "g_block": "b"}]}"#).unwrap();
    let r = run(&["g-atom", bad.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.stderr.contains("$.cells[0].mass"), "{}", r.stderr);

    let r = run(&["rademacher", &path("saturated.json"), "--cell", "Z"]);
    assert_eq!(r.code, EXIT_INPUT);
    let r = run(&["convexify", &path("rich_F01.json"), "--alpha", "3/2"]);
    assert_eq!(r.code, EXIT_INPUT);
    let r = run(&["g-atom", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INPUT);
    let r = run(&["no-such-command"]);
    assert_eq!(r.code, EXIT_INPUT);
}

#[test]
fn pennies_writes_documented_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let r = run(&["pennies", "--m", "3", "--budget", "2", "--grid", "6", "--csv", csv.to_str().unwrap(), "--samples", "5"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.report["search"]["pass"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "l2,w_1,w_2,w_3");
    assert_eq!(lines.len(), 6);
}

#[test]
fn float_mode_renders_numbers() {
    let r = run(&["--mode", "float", "solve", &path("pennies_game.json")]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.report["max_epsilon"].is_number());
    let r = run(&["solve", &path("pennies_game.json")]);
    assert!(r.report["max_epsilon"].is_string());
}

#[test]
fn sequential_flag_changes_nothing() {
    let a = run(&["pennies", "--m", "2", "--grid", "6"]);
    let b = run(&["--sequential", "pennies", "--m", "2", "--grid", "6"]);
    assert_eq!(a.report, b.report);
}
