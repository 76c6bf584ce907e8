//! End-to-end tests of the `oxc` binary: exit codes, golden output
//! fragments, and document round-trips.

use std::path::Path;
use std::process::{Command, Output};

fn oxc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oxc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn build_emits_a_parsable_document_with_the_right_census() {
    let output = oxc(&["build", "--outer", "2", "--inner", "3", "-w", "3", "--stage", "modular"]);
    assert_eq!(exit_code(&output), 0);
    let document: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(document["schema_version"], 1);
    let nodes = document["topology"]["nodes"].as_array().unwrap();
    let count = |key: &str| {
        nodes
            .iter()
            .filter(|node| node["id"].get(key).is_some())
            .count()
    };
    assert_eq!(count("input_wss"), 6);
    assert_eq!(count("oxc_module"), 4);
    assert_eq!(count("output_wss"), 6);
}

#[test]
fn build_minimal_fabric() {
    let output = oxc(&["build", "--ports", "1", "-w", "1"]);
    assert_eq!(exit_code(&output), 0);
    let document: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(document["topology"]["stage"], "classical");
}

#[test]
fn build_then_import_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("fabric.json");
    let second = dir.path().join("reimported.json");
    let output = oxc(&[
        "build", "--outer", "2", "--inner", "3", "-w", "2",
        "--include-table", "--include-metrics",
        "-o", first.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0);
    let output = oxc(&["import", first.to_str().unwrap(), "-o", second.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stdout(&output));
    assert!(stdout(&output).contains("valid"));
    let original = std::fs::read(&first).unwrap();
    let reimported = std::fs::read(&second).unwrap();
    assert_eq!(original, reimported);
}

#[test]
fn tables_show_the_worked_entries() {
    let output = oxc(&["table", "--ports", "6"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("32, 23"));

    let output = oxc(&["table", "--outer", "2", "--inner", "3"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("1002, 0210"));

    let output = oxc(&["table", "--ports", "1"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("00, 00"));

    let output = oxc(&["table", "--ports", "3", "--format", "csv"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("\"12, 21\""));
}

#[test]
fn route_prints_the_module_trace() {
    let output = oxc(&[
        "route", "--outer", "2", "--inner", "3", "-w", "3", "(1,0)", "(0,2)", "1",
    ]);
    assert_eq!(exit_code(&output), 0);
    let trace = stdout(&output);
    let expected = "input of 1x2 WSS 10\n\
                    -> output 0 of 1x2 WSS 10\n\
                    -> input 0 of 3x3 OXC module 10\n\
                    -> output 2 of 3x3 OXC module 10\n\
                    -> input 1 of 2x1 WSS 02\n\
                    -> output of 2x1 WSS 02\n";
    assert_eq!(trace, expected);
}

#[test]
fn route_names_the_classical_fiber() {
    let output = oxc(&["route", "--ports", "6", "-w", "3", "3", "2", "1"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("fiber f(32,23)"));
}

#[test]
fn route_zero_to_zero_works_everywhere() {
    for args in [
        vec!["route", "--ports", "4", "0", "0", "0"],
        vec!["route", "--outer", "2", "--inner", "2", "0", "0", "0"],
    ] {
        let output = oxc(&args);
        assert_eq!(exit_code(&output), 0, "{args:?}: {}", stdout(&output));
    }
}

#[test]
fn verify_passes_and_reports_zero_counterexamples() {
    let output = oxc(&[
        "verify", "--outer", "2", "--inner", "3", "-w", "3", "--mode", "exhaustive",
    ]);
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    assert!(text.contains("0 counterexamples"), "{text}");
    assert!(text.contains("verified"), "{text}");
}

#[test]
fn verify_flags_a_damaged_fabric_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fabric.json");
    let output = oxc(&[
        "build", "--outer", "2", "--inner", "3", "-w", "2", "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0);

    // Delete the first inter-stage fiber straight in the document.
    let mut document: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let edges = document["topology"]["edges"].as_array_mut().unwrap();
    let victim = edges
        .iter()
        .position(|edge| edge["kind"] == "stage")
        .expect("stage fiber present");
    edges.remove(victim);
    std::fs::write(&path, serde_json::to_string(&document).unwrap()).unwrap();

    let output = oxc(&["verify", "--fabric", path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2, "{}", stdout(&output));
    assert!(stdout(&output).contains("FAILED"));

    let output = oxc(&["import", path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
    assert!(stdout(&output).contains("INVALID"));
}

#[test]
fn metrics_reproduce_the_headline_numbers() {
    let output = oxc(&["metrics", "--outer", "8", "--inner", "20", "--seal"]);
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    assert!(text.contains("25600"), "{text}");
    assert!(text.contains("2560"), "{text}");
    assert!(text.contains("1/10"), "{text}");

    let output = oxc(&["metrics", "--outer", "8", "--inner", "8", "--json"]);
    assert_eq!(exit_code(&output), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["loss"][1]["total_db"], 20.0);
}

#[test]
fn dot_export_is_deterministic() {
    let args = ["export-dot", "--outer", "2", "--inner", "2", "-w", "2"];
    let first = oxc(&args);
    let second = oxc(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).starts_with("digraph fabric {"));
}

#[test]
fn setup_script_applies_requests_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("requests.txt");
    std::fs::write(&script, "# two good requests\n3 2 1\n(1,1) (0,0) 0\n").unwrap();
    let output = oxc(&[
        "setup-script", "--outer", "2", "--inner", "3", "-w", "3",
        script.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stdout(&output));
    assert!(stdout(&output).contains("2 connections in service, 0 failed"));

    // A conflicting third request fails the run with exit code 2.
    std::fs::write(&script, "3 2 1\n(1,1) (0,0) 0\n3 5 1\n").unwrap();
    let output = oxc(&[
        "setup-script", "--outer", "2", "--inner", "3", "-w", "3",
        script.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2);
    assert!(stdout(&output).contains("line 3: FAILED"));
}

#[test]
fn usage_errors_exit_with_one() {
    // No size given.
    let output = oxc(&["build"]);
    assert_eq!(exit_code(&output), 1);
    // Conflicting size flags.
    let output = oxc(&["build", "--ports", "6", "--outer", "2", "--inner", "3"]);
    assert_eq!(exit_code(&output), 1);
    // Factor mismatch surfaces as a usage error, not a panic.
    let output = oxc(&["route", "--ports", "4", "9", "0", "0"]);
    assert_eq!(exit_code(&output), 1);
    // Missing file.
    let output = oxc(&["import", "/nonexistent/fabric.json"]);
    assert_eq!(exit_code(&output), 1);
    // Help exits cleanly.
    let output = oxc(&["--help"]);
    assert_eq!(exit_code(&output), 0);
}

#[test]
fn intermediate_stages_are_buildable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    for stage in ["classical", "prime", "double-prime", "modular"] {
        let path = dir.path().join(format!("{stage}.json"));
        let output = oxc(&[
            "build", "--outer", "2", "--inner", "3", "-w", "2",
            "--stage", stage, "-o", path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 0, "stage {stage}");
        let output = oxc(&["verify", "--fabric", path.to_str().unwrap()]);
        assert_eq!(exit_code(&output), 0, "stage {stage}: {}", stdout(&output));
        assert!(Path::new(&path).exists());
    }
}

#[test]
fn sealed_and_coupler_builds_verify() {
    let output = oxc(&[
        "verify", "--outer", "2", "--inner", "3", "-w", "2", "--seal",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stdout(&output));
    let output = oxc(&[
        "verify", "--outer", "2", "--inner", "3", "-w", "2", "--coupler-inputs",
        "--mode", "randomized", "--budget", "200",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stdout(&output));
    // Both options together.
    let output = oxc(&[
        "verify", "--outer", "2", "--inner", "2", "-w", "2", "--seal", "--coupler-inputs",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stdout(&output));
}
