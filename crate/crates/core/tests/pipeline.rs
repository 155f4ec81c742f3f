//! Command-line shape: exit codes, emitted files, and format round trips.

mod common;

use std::fs;
use std::path::Path;

use rstock::io::{parse_instance, write_instance};
use rstock::qubo::parse_qubo;

fn rstock(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_rstock"))
        .args(args)
        .output()
        .expect("failed to spawn the rstock binary");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_family_instance(path: &Path, seed: u64) {
    let inst = common::tiny_instance(seed);
    fs::write(path, write_instance(&inst).unwrap()).unwrap();
}

#[test]
fn generate_round_trips_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    let (code, _, err) = rstock(&[
        "generate", "--trips", "12", "--trains", "4", "--seed", "2", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let inst = parse_instance(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(inst.num_trips(), 12);
    assert_eq!(inst.num_trains(), 4);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(rstock(&["solve-cp", "--bogus-flag"]).0, 2);
    assert_eq!(rstock(&["no-such-command"]).0, 2);
    assert_eq!(rstock(&[]).0, 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let (code, _, err) = rstock(&["solve-cp", "--in", "/nonexistent/path.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("error"), "stderr was: {err}");
}

#[test]
fn out_of_range_fraction_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    write_family_instance(&path, 11);
    let (code, _, err) =
        rstock(&["subset", "--in", path.to_str().unwrap(), "--fraction", "2.0"]);
    assert_eq!(code, 1);
    assert!(err.contains("fraction"), "stderr was: {err}");
}

#[test]
fn matrix_size_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    write_family_instance(&path, 12);
    let (code, _, err) = rstock(&[
        "build-qubo", "--in", path.to_str().unwrap(), "--max-nonzeros", "3",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("non-zero"), "stderr was: {err}");
}

#[test]
fn built_matrix_solves_from_file_and_from_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("inst.json");
    write_family_instance(&inst_path, 13);

    let model_path = dir.path().join("model.txt");
    let (code, _, err) = rstock(&[
        "build-qubo", "--in", inst_path.to_str().unwrap(), "--out",
        model_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let model = parse_qubo(&fs::read_to_string(&model_path).unwrap()).unwrap();

    let bits_path = dir.path().join("bits.txt");
    let (code, _, err) = rstock(&[
        "solve-qubo", "--in", model_path.to_str().unwrap(), "--variant", "exhaustive",
        "--out", bits_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let bits = fs::read_to_string(&bits_path).unwrap();
    assert_eq!(bits.trim().len(), model.num_vars);
    assert!(bits.trim().chars().all(|c| c == '0' || c == '1'));

    let sched_path = dir.path().join("sched.json");
    let (code, _, err) = rstock(&[
        "solve-qubo", "--instance", inst_path.to_str().unwrap(), "--variant", "exhaustive",
        "--out", sched_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let sched: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&sched_path).unwrap()).unwrap();
    assert!(sched.get("perTrain").is_some(), "schedule JSON: {sched}");
}

#[test]
fn mixing_matrix_and_instance_inputs_is_a_usage_error() {
    let (code, _, _) = rstock(&["solve-qubo", "--in", "a.txt", "--instance", "b.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = rstock(&["solve-qubo", "--variant", "tabu"]);
    assert_eq!(code, 2);
}

#[test]
fn report_emits_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("inst.json");
    write_family_instance(&inst_path, 14);
    let out_dir = dir.path().join("report");
    let (code, stdout, err) = rstock(&[
        "report", "--in", inst_path.to_str().unwrap(), "--methods", "cp,tabu", "--iterations",
        "200", "--restarts", "2", "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    for name in
        ["metrics.txt", "schedule-cp.json", "gantt-cp.svg", "schedule-tabu.json", "gantt-tabu.svg"]
    {
        assert!(out_dir.join(name).exists(), "missing artifact {name}");
    }
    assert!(stdout.contains("method"), "stdout was: {stdout}");
    let metrics = fs::read_to_string(out_dir.join("metrics.txt")).unwrap();
    assert_eq!(metrics, stdout);
}
