use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn groundbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundbound"))
        .args(args)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn heisenberg_report_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let plots = dir.path().join("plots");
    let o = groundbound(&[
        "--model",
        "heisenberg",
        "--sites",
        "6",
        "--J",
        "0.5",
        "--moments",
        "fourth",
        "--tau-e",
        "1e-4",
        "--oracle",
        "--out",
        path_str(&out),
        "--trace",
        path_str(&trace),
        "--plot-dir",
        path_str(&plots),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = read_json(&out);
    let ratio = r["ratio"].as_f64().unwrap();
    assert!((ratio - 0.9979).abs() <= 5e-3, "{ratio}");
    assert!(r["lower_bound"].as_f64().unwrap() <= r["exact_energy"].as_f64().unwrap());
    assert_eq!(r["termination"], "converged");
    assert_eq!(r["tolerances"]["tau_e"], 1e-4);
    assert_eq!(r["tolerances"]["tau_dykstra"], 1e-4);
    let nearest = r["correlations"]["nearest"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&nearest));

    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("k,energy,dykstra_sweeps,elapsed_seconds")
    );
    assert_eq!(lines.count() as u64, r["iterations"].as_u64().unwrap());

    let per_site = std::fs::read_to_string(plots.join("per_site.csv")).unwrap();
    let mut rows = per_site.lines();
    assert_eq!(rows.next(), Some("N,e_N,e_inf"));
    let fields: Vec<f64> = rows
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(fields[0], 6.0);
    assert!((fields[2] + 2.0 * (2f64.ln() - 0.25)).abs() < 1e-12);

    let iters = std::fs::read_to_string(plots.join("iterations.csv")).unwrap();
    let energies: Vec<f64> = iters
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(iters.starts_with("k,E_k\n"));
    assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-3));
}

#[test]
fn ising_ti_relative_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = groundbound(&[
        "--model",
        "ising",
        "--sites",
        "100",
        "--jc",
        "-1",
        "--h",
        "0.5",
        "--ti",
        "--moments",
        "second",
        "--tau-e",
        "1e-8",
        "--dykstra-statistic",
        "sqrt",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = read_json(&out);
    assert!(
        r["relative_deviation"].as_f64().unwrap() <= 1e-6,
        "{}",
        r["relative_deviation"]
    );
    assert_eq!(r["exact_source"], "closed-form");
}

#[test]
fn missing_required_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let o = groundbound(&[
        "--model",
        "ising",
        "--out",
        path_str(&out),
        "--trace",
        path_str(&trace),
    ]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--sites"));
    assert!(!out.exists() && !trace.exists());
}

#[test]
fn malformed_flags_are_usage_errors() {
    assert_eq!(
        groundbound(&["--model", "potts", "--sites", "4"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        groundbound(&["--model", "ising", "--sites", "1"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        groundbound(&["--model", "ising", "--sites", "4", "--alpha", "-1"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        groundbound(&["--model", "ising", "--sites", "20", "--oracle"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(groundbound(&["--help"]).status.code(), Some(0));
}

#[test]
fn dual_with_fourth_moments_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = groundbound(&[
        "--model",
        "heisenberg",
        "--sites",
        "3",
        "--stop",
        "gap",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("second-moment"));
    assert!(!out.exists());
}

#[test]
fn iteration_limit_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = groundbound(&[
        "--model",
        "ising",
        "--sites",
        "6",
        "--max-iters",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_json(&out)["termination"], "max-iterations");
}

#[test]
fn gap_stop_reports_gap() {
    let o = groundbound(&[
        "--model",
        "ising",
        "--sites",
        "6",
        "--stop",
        "gap",
        "--tau-gap",
        "1e-6",
        "--tau-e",
        "1e-10",
        "--dykstra-statistic",
        "sqrt",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let gap = r["duality_gap"].as_f64().unwrap();
    assert!((-1e-8..=1e-6).contains(&gap), "{gap}");
    assert_eq!(r["tolerances"]["tau_gap"], 1e-6);

    let o = groundbound(&["--model", "ising", "--sites", "6", "--ti", "--stop", "gap"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override_and_echo_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"model": "heisenberg", "sites": 5, "tau-e": 1e-5, "J": 0.25}"#,
    )
    .unwrap();
    let first = dir.path().join("first.json");
    let o = groundbound(&[
        "--config",
        path_str(&cfg),
        "--sites",
        "4",
        "--out",
        path_str(&first),
        "--threads",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r1 = read_json(&first);
    assert_eq!(r1["config"]["sites"], 4);
    assert_eq!(r1["config"]["J"], 0.25);
    assert_eq!(r1["config"]["tau-e"], 1e-5);

    // re-run from the echoed configuration
    let mut echo = r1["config"].clone();
    let second = dir.path().join("second.json");
    echo["out"] = Value::String(path_str(&second).into());
    let echo_path = dir.path().join("echo.json");
    std::fs::write(&echo_path, echo.to_string()).unwrap();
    let o = groundbound(&["--config", path_str(&echo_path)]);
    assert_eq!(o.status.code(), Some(0));
    let r2 = read_json(&second);
    for key in [
        "lower_bound",
        "iterations",
        "termination",
        "correlations",
        "instance",
        "n_params",
        "dykstra_sweeps",
    ] {
        assert_eq!(r1[key], r2[key], "{key}");
    }
}

#[test]
fn warm_start_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let moments = dir.path().join("moments.json");
    let first = dir.path().join("first.json");
    let o = groundbound(&[
        "--model",
        "heisenberg",
        "--sites",
        "6",
        "--ti",
        "--save-moments",
        path_str(&moments),
        "--out",
        path_str(&first),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let record = read_json(&moments);
    assert_eq!(record["layout"], "translation-invariant");
    assert_eq!(record["n_sites"], 6);

    let extended = dir.path().join("extended.json");
    let o = groundbound(&[
        "--model",
        "heisenberg",
        "--sites",
        "8",
        "--ti",
        "--warm-start",
        path_str(&moments),
        "--out",
        path_str(&extended),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let cold = dir.path().join("cold.json");
    let o = groundbound(&[
        "--model",
        "heisenberg",
        "--sites",
        "8",
        "--ti",
        "--out",
        path_str(&cold),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (w, c) = (read_json(&extended), read_json(&cold));
    assert!(w["iterations"].as_u64() < c["iterations"].as_u64());
    assert!((w["lower_bound"].as_f64().unwrap() - c["lower_bound"].as_f64().unwrap()).abs() < 1e-2);
}
