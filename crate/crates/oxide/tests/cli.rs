//! End-to-end tests of the `oxide` binary: output formats, exit codes,
//! and the stability guarantees the driver makes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(name)
}

fn oxide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oxide"))
        .args(args)
        .env("OXIDE_COLOR", "never")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn check_prints_ok_with_the_final_type() {
    let out = oxide(&["check", corpus("disjoint_fields.ox").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "ok: u32\n");
}

#[test]
fn check_prints_unit_for_unit_programs() {
    let dir = std::env::temp_dir().join(format!("oxide-unit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("unit.ox");
    std::fs::write(&file, "()\n").unwrap();
    let out = oxide(&["check", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "ok: unit\n");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_reports_errors_with_code_and_position() {
    let path = corpus("move_twice.ox");
    let out = oxide(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(
        text.starts_with("error[E-MOVED]:"),
        "unexpected output: {text}"
    );
    assert!(text.contains("move_twice.ox:6:"), "missing position: {text}");
}

#[test]
fn trace_env_prints_solved_provenances_exactly() {
    let out = oxide(&[
        "check",
        corpus("disjoint_fields.ox").to_str().unwrap(),
        "--trace-env",
    ]);
    let text = stdout(&out);
    assert!(text.contains("'x = {uniq pt.0}\n"), "trace output: {text}");
    assert!(text.contains("'y = {uniq pt.1}\n"), "trace output: {text}");
}

#[test]
fn run_prints_the_final_value() {
    let out = oxide(&["run", corpus("disjoint_fields.ox").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "value: 6\n");
}

#[test]
fn run_reports_aborts_with_exit_2() {
    let out = oxide(&["run", corpus("abort_message.ox").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out), "abort: oops\n");
}

#[test]
fn run_refuses_ill_typed_programs_without_force() {
    let out = oxide(&["run", corpus("force_stuck.ox").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("run refused"));
}

#[test]
fn forced_run_sticks_on_the_dynamic_check() {
    let out = oxide(&["run", corpus("force_stuck.ox").to_str().unwrap(), "--force"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(
        text.starts_with("stuck: dynamic uniq-safety violation"),
        "unexpected output: {text}"
    );
}

#[test]
fn forced_unchecked_run_goes_through() {
    let out = oxide(&[
        "run",
        corpus("force_stuck.ox").to_str().unwrap(),
        "--force",
        "--unchecked",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "value: 6\n");
}

#[test]
fn unchecked_runs_match_checked_runs_on_accepted_programs() {
    for name in ["disjoint_fields.ox", "branch_disjoint.ox", "closure_capture.ox"] {
        let checked = oxide(&["run", corpus(name).to_str().unwrap()]);
        let unchecked = oxide(&["run", corpus(name).to_str().unwrap(), "--unchecked"]);
        assert_eq!(stdout(&checked), stdout(&unchecked), "{name} differs");
        assert_eq!(checked.status.code(), unchecked.status.code());
    }
}

#[test]
fn fuel_limits_are_honored() {
    let dir = std::env::temp_dir().join(format!("oxide-fuel-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("spin.ox");
    std::fs::write(&file, "fn spin() { spin() }\nspin()\n").unwrap();
    let out = oxide(&["run", file.to_str().unwrap(), "--fuel", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("fuel exhausted"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_files_exit_4() {
    let out = oxide(&["check", "no-such-file.ox"]);
    assert_eq!(out.status.code(), Some(4));
    let out = oxide(&["run", "no-such-file.ox"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn usage_errors_exit_4() {
    let out = oxide(&[]);
    assert_eq!(out.status.code(), Some(4));
    let out = oxide(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(4));
    let out = oxide(&["run", "x.ox", "--fuel", "not-a-number"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn corpus_exit_reflects_all_entries_passing() {
    let manifest = corpus("manifest.toml");
    let out = oxide(&["corpus", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "corpus failed: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS move_twice.ox"));
    assert!(text.lines().last().unwrap().starts_with("corpus:"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn probe_emits_one_json_object_per_line() {
    let manifest = corpus("manifest.toml");
    let out = oxide(&["probe", manifest.to_str().unwrap(), "--progress"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for line in text.lines() {
        assert!(line.starts_with('{') && line.ends_with('}'), "not JSON: {line}");
        assert!(line.contains("\"probe\":"));
        assert!(line.contains("\"outcome\":"));
    }
    assert!(text.contains("\"id\":\"disjoint_fields.ox\",\"probe\":\"progress\",\"outcome\":\"pass\""));
}

#[test]
fn probe_smallcheck_alone_passes() {
    let manifest = corpus("manifest.toml");
    let out = oxide(&["probe", manifest.to_str().unwrap(), "--smallcheck"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("\"probe\":\"smallcheck\",\"outcome\":\"pass\""));
}

#[test]
fn probe_runs_are_deterministic() {
    let manifest = corpus("manifest.toml");
    let first = oxide(&["probe", manifest.to_str().unwrap()]);
    let second = oxide(&["probe", manifest.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
}
