use std::process::Command as Process;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["solvdyn"];
    full.extend_from_slice(args);
    let code = solvdyn_cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn eigen_of_cat_map() {
    let d = json(&["eigen", "--A", "[[2,1],[1,1]]"]);
    assert_eq!(d["schema"], "solvdyn/1");
    assert_eq!(d["command"], "eigen");
    let lam = d["result"]["lambda"].as_f64().unwrap();
    assert!((lam - 2.618033988749895).abs() < 1e-12);
    assert_eq!(d["result"]["hyperbolic"], true);
}

#[test]
fn parabolic_matrix_is_not_hyperbolic() {
    let d = json(&["eigen", "--A", "[[1,1],[0,1]]"]);
    assert_eq!(d["result"]["hyperbolic"], false);
}

#[test]
fn lefschetz_preset() {
    let d = json(&["lefschetz", "--preset", "paper-matrix-1"]);
    assert_eq!(d["result"]["lefschetz"], 0);
    let d = json(&["lefschetz", "--A", "[[2,1,0],[1,1,0],[0,0,-1]]"]);
    assert_eq!(d["result"]["lefschetz"], -2);
}

#[test]
fn quotient_preset_pairs() {
    let d = json(&["quotient-classify", "--preset", "tau1", "--fstar", "paper-matrix-1"]);
    assert_eq!(d["result"]["classification"], "flat-double-cover");
    for i in 2..=3 {
        let p = format!("tau{i}");
        let d = json(&["quotient-classify", "--preset", &p]);
        assert_eq!(d["result"]["classification"], "flat-double-cover", "{p}");
    }
}

#[test]
fn commutant_decomposes_b() {
    let d = json(&["commutant", "--A", "[[2,1],[1,1]]", "--B", "[[-5,-3],[-3,-2]]"]);
    assert_eq!(d["result"]["generator"], serde_json::json!([[1, 1], [1, 0]]));
    assert_eq!(d["result"]["B"]["decomposition"]["sign"], -1);
    assert_eq!(d["result"]["B"]["decomposition"]["power"], 4);
}

#[test]
fn heis_reports_both_example_maps() {
    let d = json(&["heis", "--k", "2"]);
    let ex = &d["result"]["example"];
    assert_eq!(ex["printed"]["is_homomorphism"], false);
    assert_eq!(ex["corrected"]["is_homomorphism"], true);
    assert_eq!(ex["printed"]["h1_block"]["error"], "CenterNotPreserved");
    assert_eq!(d["result"]["commutator_is_central_generator"], true);
}

#[test]
fn exit_codes() {
    // validation: not unimodular
    let (code, out, _) = run(&["eigen", "--A", "[[1,2],[3,4]]"]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["kind"], "validation");
    // usage: unknown subcommand and flag that does not apply
    assert_eq!(run(&["frobnicate"]).0, 64);
    assert_eq!(run(&["eigen", "--eps", "0.1"]).0, 64);
    assert_eq!(run(&["eigen", "--format", "csv"]).0, 64);
    // computation: the graph transform cannot converge in one iteration
    let (code, out, _) = run(&["graph-transform", "--grid", "8x4", "--maxiter", "1"]);
    assert_eq!(code, 1, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["kind"], "computation");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"A": [[2,1],[1,1]], "colour": 3}"#).unwrap();
    let (code, _, err) = run(&["eigen", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("colour"));
}

#[test]
fn config_round_trip_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    let (code, _, _) = run(&["cert-sol", "--B", "[[-1,0],[0,-1]]", "--k", "2", "--out", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let first = std::fs::read_to_string(&p).unwrap();
    let (code, again, _) = run(&["cert-sol", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(first, again);
    // a config written by another command is refused
    assert_eq!(run(&["eigen", "--config", p.to_str().unwrap()]).0, 2);
}

#[test]
fn config_round_trip_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    let args = ["height-progress", "--seed", "3", "--samples", "16", "--n-max", "3"];
    let (code, first, _) = run(&args);
    assert_eq!(code, 0);
    std::fs::write(&p, &first).unwrap();
    let (code, again, _) = run(&["height-progress", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(first, again);
    // flags override file values
    let (_, other, _) = run(&["height-progress", "--config", p.to_str().unwrap(), "--seed", "4"]);
    let v: Value = serde_json::from_str(&other).unwrap();
    assert_eq!(v["config"]["seed"], 4);
    assert_eq!(v["config"]["samples"], 16);
}

#[test]
fn csv_output() {
    let (code, out, _) = run(&["height-progress", "--samples", "8", "--n-max", "2", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["n", "min_gain"]);
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let g: f64 = rows[1][1].parse().unwrap();
    assert!(g > 1.0);
}

#[test]
fn preset_for_wrong_command_is_usage_error() {
    assert_eq!(run(&["eigen", "--preset", "tau1"]).0, 64);
    assert_eq!(run(&["eigen", "--preset", "no-such"]).0, 2);
}

#[test]
fn binary_runs() {
    let out = Process::new(env!("CARGO_BIN_EXE_solvdyn"))
        .args(["lefschetz", "--preset", "paper-matrix-2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "lefschetz");
    let out = Process::new(env!("CARGO_BIN_EXE_solvdyn")).arg("nope").output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}
