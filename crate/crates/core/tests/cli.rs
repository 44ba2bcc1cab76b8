//! End-to-end checks of the command-line surface: the exit-code contract and
//! round-tripping of every emitted artifact.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pathgain")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pathgain-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn pipeline_on_butterfly() {
    let butterfly = fixture("butterfly.json");
    let sys = tmp("butterfly_system.json");
    let red = tmp("butterfly_reduced.json");
    let sol = tmp("butterfly_solution.json");
    let code = tmp("butterfly_code.json");
    let report = tmp("butterfly_report.json");

    let out = run(&["equations", butterfly.to_str().unwrap(), "--out", sys.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let system: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sys).unwrap()).unwrap();
    assert_eq!(system["variables"].as_array().unwrap().len(), 12);
    assert_eq!(system["equations"].as_array().unwrap().len(), 14);

    let out = run(&["simplify", sys.to_str().unwrap(), "--out", red.to_str().unwrap()]);
    assert!(out.status.success());
    let reduced: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&red).unwrap()).unwrap();
    assert_eq!(reduced["reduced"]["equations"].as_array().unwrap().len(), 1);
    assert_eq!(reduced["verdict"], "no-constraint");

    let out = run(&["solve", sys.to_str().unwrap(), "--field", "2", "--out", sol.to_str().unwrap()]);
    assert!(out.status.success());

    let out = run(&[
        "recover",
        butterfly.to_str().unwrap(),
        sol.to_str().unwrap(),
        "--out",
        code.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "verify",
        butterfly.to_str().unwrap(),
        code.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
}

#[test]
fn solve_reports_characteristic_verdict_with_exit_1() {
    let out = run(&[
        "solve",
        fixture("char2_system.json").to_str().unwrap(),
        "--field",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("chars-dividing:2"), "stdout: {}", text);
}

#[test]
fn analyze_reports_characteristic_verdict() {
    let out = run(&["analyze", fixture("char2_system.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["verdict"], "chars-dividing:2");
    assert!(!doc["branch_log"].as_array().unwrap().is_empty());
}

#[test]
fn edge_formulation_system_solves_too() {
    let km = tmp("butterfly_km.json");
    let out = run(&[
        "equations",
        fixture("butterfly.json").to_str().unwrap(),
        "--formulation",
        "edge",
        "--out",
        km.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["solve", km.to_str().unwrap(), "--field", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn solve_char2_over_gf2_succeeds() {
    let out = run(&[
        "solve",
        fixture("char2_system.json").to_str().unwrap(),
        "--field",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn budget_exceeded_is_exit_3() {
    let out = run(&[
        "solve",
        fixture("char2_system.json").to_str().unwrap(),
        "--field",
        "2",
        "--budget",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn input_errors_are_exit_2() {
    let missing = run(&["equations", "/nonexistent/problem.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let garbage = tmp("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    let bad = run(&["equations", garbage.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));

    let badfield = run(&[
        "solve",
        fixture("char2_system.json").to_str().unwrap(),
        "--field",
        "6",
    ]);
    assert_eq!(badfield.status.code(), Some(2));
}

#[test]
fn unsatisfiable_demand_is_exit_1() {
    let bad = tmp("unreachable.json");
    std::fs::write(
        &bad,
        r#"{"nodes":[1,2,3],"edges":[{"id":"e1","tail":1,"head":3}],
           "sources":[{"node":1},{"node":2}],"sinks":[{"node":3,"demand":2}]}"#,
    )
    .unwrap();
    let out = run(&["equations", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tampered_code_fails_verification_with_exit_1() {
    let butterfly = fixture("butterfly.json");
    let code_path = tmp("tampered_code.json");
    let out = run(&[
        "recover",
        butterfly.to_str().unwrap(),
        fixture("butterfly_gf4_solution.json").to_str().unwrap(),
        "--out",
        code_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mut code: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&code_path).unwrap()).unwrap();
    for entry in code["coeffs"].as_array_mut().unwrap() {
        if entry["from"] == "e2" && entry["to"] == "e3" {
            entry["value"] = serde_json::Value::String("0,0".into());
        }
    }
    std::fs::write(&code_path, serde_json::to_string(&code).unwrap()).unwrap();
    let out = run(&[
        "verify",
        butterfly.to_str().unwrap(),
        code_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_oracle_small_run_agrees() {
    let out = run(&["compare-oracle", "--trials", "20", "--seed", "7", "--field", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0 disagreements"), "stdout: {}", text);
}

#[test]
fn compare_oracle_zero_trials_is_empty_success() {
    let out = run(&["compare-oracle", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn seeded_runs_are_bit_reproducible() {
    let a = run(&["compare-oracle", "--trials", "15", "--seed", "99", "--field", "3"]);
    let b = run(&["compare-oracle", "--trials", "15", "--seed", "99", "--field", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
}

#[test]
fn transform_emits_forest_with_aliases() {
    let out = run(&["transform", fixture("butterfly.json").to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["trees"].as_array().unwrap().len(), 4);
    assert_eq!(doc["leaf_vars"].as_array().unwrap().len(), 12);
    assert!(doc["leaf_vars"][0]["alias"].is_string());
}

#[test]
fn bench_default_completes_and_reports_counts() {
    let out = run(&["bench"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("transform:"), "stdout: {}", text);
    assert!(text.contains("equations:"));
    assert!(text.contains("simplify:"));
}

#[test]
fn bench_zero_sinks_is_trivial() {
    let out = run(&["bench", "--sinks", "0", "--seed", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0 variables, 0 equations"), "stdout: {}", text);
}

#[test]
fn emitted_system_reloads_identically() {
    let butterfly = fixture("butterfly.json");
    let sys1 = tmp("rt_system.json");
    let sys2 = tmp("rt_system2.json");
    run(&["equations", butterfly.to_str().unwrap(), "--out", sys1.to_str().unwrap()]);
    // simplify reads the file back through the loader; emitting the loaded
    // system again must be byte-identical.
    let first = std::fs::read_to_string(&sys1).unwrap();
    let value: serde_json::Value = serde_json::from_str(&first).unwrap();
    let reloaded = pathgain::poly::PolySystem::from_json(&value).unwrap();
    std::fs::write(&sys2, serde_json::to_string_pretty(&reloaded.to_json()).unwrap() + "\n").unwrap();
    let second = std::fs::read_to_string(&sys2).unwrap();
    assert_eq!(first, second);
}
