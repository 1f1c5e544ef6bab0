//! The `dipolink` binary: output shapes, exit codes and reproducibility.

use std::process::{Command, Output};

use serde_json::Value;

fn dipolink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dipolink")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "chain-sweep",
        "ring-sweep",
        "fidelity-curve",
        "onsite-energies",
        "spectrum-sweep",
        "normalized-time",
        "bound-state",
        "optimize-placement",
        "encoded-transfer",
        "disorder",
    ] {
        let out = dipolink(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("--model"), "{sub}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(dipolink(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(dipolink(&["chain-sweep", "--frobnicate"]).status.code(), Some(1));
    let bad = dipolink(&["chain-sweep", "--n-min", "1", "--n-max", "3"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(bad.stdout.is_empty());
    assert!(!bad.stderr.is_empty());
}

#[test]
fn chain_sweep_csv() {
    let text = stdout(&dipolink(&["chain-sweep", "--n-min", "2", "--n-max", "5", "--format", "csv"]));
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    let header: Vec<&str> = lines[0].split(',').collect();
    for column in ["n", "f_max", "t_peak"] {
        assert!(header.contains(&column), "{header:?}");
    }
    let f_col = header.iter().position(|c| *c == "f_max").unwrap();
    let n2: f64 = lines[1].split(',').nth(f_col).unwrap().parse().unwrap();
    assert!((n2 - 1.0).abs() < 1e-12);
}

#[test]
fn output_is_deterministic_and_can_go_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rings.csv");
    let args = ["ring-sweep", "--n-min", "3", "--n-max", "8", "--model", "nn"];
    let first = stdout(&dipolink(&args));
    let out = dipolink(&[&args[..], &["--output", path.to_str().unwrap()]].concat());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), first);
}

#[test]
fn json_geometry_round_trips_through_geometry_file() {
    let dir = tempfile::tempdir().unwrap();
    let curve = stdout(&dipolink(&["fidelity-curve", "--n", "6", "--steps", "200", "--format", "json"]));
    let path = dir.path().join("curve.json");
    std::fs::write(&path, &curve).unwrap();
    let again = stdout(&dipolink(&[
        "fidelity-curve",
        "--steps",
        "200",
        "--format",
        "json",
        "--geometry-file",
        path.to_str().unwrap(),
    ]));
    assert_eq!(curve, again);

    let report = stdout(&dipolink(&["optimize-placement", "--n", "4", "--restarts", "2", "--format", "json"]));
    let report_path = dir.path().join("placement.json");
    std::fs::write(&report_path, &report).unwrap();
    let v: Value = serde_json::from_str(&report).unwrap();
    let encoded = stdout(&dipolink(&[
        "encoded-transfer",
        "--width",
        "1",
        "--steps",
        "100",
        "--format",
        "json",
        "--geometry-file",
        report_path.to_str().unwrap(),
    ]));
    let e: Value = serde_json::from_str(&encoded).unwrap();
    assert_eq!(e["geometry"], v["geometry"]);
}

#[test]
fn disorder_is_seeded_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("samples.csv");
    let base = ["disorder", "--samples", "500", "--seed", "17", "--noise-model", "gaussian-per-site"];
    let run = |threads: &str, extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_dipolink"))
            .args(base)
            .args(extra)
            .env("DIPOLINK_THREADS", threads)
            .output()
            .unwrap();
        stdout(&out)
    };
    let one = run("1", &["--dump-samples", dump.to_str().unwrap()]);
    assert_eq!(one, run("3", &[]));
    assert_eq!(one, run("0", &[]));
    assert_ne!(
        one,
        stdout(&dipolink(&["disorder", "--samples", "500", "--seed", "18", "--noise-model", "gaussian-per-site"]))
    );
    let samples = std::fs::read_to_string(&dump).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("sample,F_at_t_nominal,failed"));
    assert_eq!(lines.count(), 500);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_dipolink"))
        .args(["onsite-energies", "--n", "4"])
        .env("DIPOLINK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_placement_reports_then_fails() {
    let out = dipolink(&[
        "optimize-placement",
        "--n",
        "5",
        "--min-fidelity",
        "0.9999999",
        "--restarts",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["feasible"], Value::Bool(false));
}

#[test]
fn spectrum_and_onsite_tables() {
    let spec = stdout(&dipolink(&["spectrum-sweep", "--n-min", "2", "--n-max", "4"]));
    assert_eq!(spec.lines().next(), Some("n,m,energy,delta_e"));
    assert_eq!(spec.lines().count(), 1 + 2 + 3 + 4);
    let onsite = stdout(&dipolink(&["onsite-energies", "--n", "15", "--format", "json"]));
    let v: Value = serde_json::from_str(&onsite).unwrap();
    assert_eq!(v.as_array().map(Vec::len), Some(15));
}
