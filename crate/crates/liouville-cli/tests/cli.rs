//! End-to-end checks of the `liouville` binary: exit codes, determinism,
//! and a few physics landmarks pulled out of the JSON reports.

use serde_json::Value;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

const REDUCED_CONFIG: &str = r#"{
    "schema": 1,
    "model": {"effparams": {
        "alpha": 1.2, "beta": 0.0, "gamma": 0.7, "delta": 1.1,
        "epsilon": 0.0, "zeta": 0.9, "eta": 1.3
    }}
}"#;

const SPIRAL_CONFIG: &str = r#"{
    "schema": 1,
    "model": {"classical": {"gamma": 0.05, "mu": 0.05, "start": [0.0, 1.0]}},
    "analysis": {"time_grid": {"start": 0.0, "stop": 6.283185307179586, "points": 201}}
}"#;

const EVOLVE_CONFIG: &str = r#"{
    "schema": 1,
    "model": {"effparams": {
        "alpha": 1.2, "beta": 0.0, "gamma": 0.7, "delta": 1.1,
        "epsilon": 0.0, "zeta": 0.9, "eta": 1.3
    }},
    "dissipator": {"kind": "coefficient-damping", "terms": [
        {"label": "x0", "rate": 0.8}, {"label": "0x", "rate": 0.6},
        {"label": "0y", "rate": 0.5}, {"label": "yz", "rate": 0.7},
        {"label": "zy", "rate": 0.9}
    ]},
    "rho0": {"y0": 0.4, "z0": 0.3, "xx": 0.2},
    "analysis": {"time_grid": {"start": 0.0, "stop": 8.0, "points": 5}}
}"#;

fn run(args: &[&str], config: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("the liouville binary spawns");
    child
        .stdin
        .as_mut()
        .expect("stdin is piped")
        .write_all(config.as_bytes())
        .expect("config fits in the pipe");
    child.wait_with_output().expect("the binary terminates")
}

fn run_json(args: &[&str], config: &str) -> Value {
    let out = run(args, config);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn scratch_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("liouville-cli-{}-{name}", std::process::id()))
}

#[test]
fn config_errors_exit_with_code_2() {
    let unknown_key = r#"{"schema": 1, "model": {"classical": {}}, "bogus": 3}"#;
    assert_eq!(run(&["spectrum"], unknown_key).status.code(), Some(2));

    let wrong_schema = r#"{"schema": 99, "model": {"classical": {}}}"#;
    assert_eq!(run(&["spectrum"], wrong_schema).status.code(), Some(2));

    let bad_triple = run(&["correlators", "--jkl", "qqq"], REDUCED_CONFIG);
    assert_eq!(bad_triple.status.code(), Some(2));

    let no_state = run(&["evolve"], REDUCED_CONFIG);
    assert_eq!(no_state.status.code(), Some(2));
}

#[test]
fn violated_preconditions_exit_with_code_3() {
    let classical = r#"{"schema": 1, "model": {"classical": {}}}"#;
    assert_eq!(run(&["spectrum"], classical).status.code(), Some(3));
    assert_eq!(
        run(&["correlators"], classical).status.code(),
        Some(3),
        "correlators need a spin model"
    );
    assert_eq!(
        run(&["classical", "flow"], REDUCED_CONFIG).status.code(),
        Some(3),
        "flow needs a classical model"
    );

    let tilted = r#"{
        "schema": 1,
        "model": {"effparams": {
            "alpha": 1.0, "beta": 0.5, "gamma": 1.0, "delta": 1.0,
            "epsilon": 0.0, "zeta": 1.0, "eta": 1.0
        }}
    }"#;
    assert_eq!(
        run(&["spectrum", "--analytic"], tilted).status.code(),
        Some(3),
        "the closed-form route must refuse a nonzero beta"
    );
}

#[test]
fn reports_are_byte_identical_across_reruns_and_jobs() {
    let args_serial = ["spectrum", "--draws", "12", "--seed", "7"];
    let args_parallel = ["spectrum", "--draws", "12", "--seed", "7", "--jobs", "4"];
    let first = run(&args_serial, REDUCED_CONFIG);
    let second = run(&args_serial, REDUCED_CONFIG);
    let parallel = run(&args_parallel, REDUCED_CONFIG);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "reruns must agree byte for byte");
    assert_eq!(
        first.stdout, parallel.stdout,
        "worker count must not leak into the report"
    );
}

#[test]
fn file_config_and_out_flag_match_the_stdin_stdout_route() {
    let config_path = scratch_path("config.json");
    let report_path = scratch_path("report.json");
    std::fs::write(&config_path, REDUCED_CONFIG).expect("scratch config writes");

    let streamed = run(&["spectrum"], REDUCED_CONFIG);
    assert!(streamed.status.success());

    let filed = run(
        &[
            "spectrum",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ],
        "",
    );
    assert!(filed.status.success());
    assert!(filed.stdout.is_empty(), "--out redirects the report");
    let report = std::fs::read(&report_path).expect("report file exists");
    assert_eq!(report, streamed.stdout);

    let _ = std::fs::remove_file(&config_path);
    let _ = std::fs::remove_file(&report_path);
}

#[test]
fn correlator_reports_carry_the_sum_rule_and_the_cancellation_split() {
    let single = run_json(&["correlators", "--jkl", "y,y,0"], REDUCED_CONFIG);
    assert_eq!(single["series"][0]["triple"], "yy0");
    let f0 = single["series"][0]["values"][0].as_f64().unwrap();
    assert!(
        (f0 - 4.0).abs() < 1e-12,
        "equal-time autocorrelator must start at 4, got {f0}"
    );
    assert!(
        single.get("cancellation").is_none(),
        "a single triple is not a cancellation sweep"
    );

    let full = run_json(&["correlators", "--all"], REDUCED_CONFIG);
    assert_eq!(full["series"].as_array().unwrap().len(), 45);
    assert_eq!(full["cancellation"]["vanishing"].as_array().unwrap().len(), 25);
    assert_eq!(
        full["cancellation"]["nonvanishing"].as_array().unwrap().len(),
        20
    );
}

#[test]
fn damped_flow_contracts_by_the_predicted_spiral_radius() {
    let report = run_json(&["classical", "flow"], SPIRAL_CONFIG);
    let radius = report["final_radius"].as_f64().unwrap();
    let expected = (-std::f64::consts::PI / 10.0).exp();
    assert!(
        (radius - expected).abs() < 1e-8,
        "after one turn the orbit should sit at radius {expected}, got {radius}"
    );
    let freqs = report["eigenfrequencies"].as_array().unwrap();
    for freq in freqs {
        let im = freq[1].as_f64().unwrap();
        assert!((im + 0.05).abs() < 1e-12, "both modes decay at rate 1/20");
    }
}

#[test]
fn scaling_algebra_report_is_exact() {
    let config = r#"{"schema": 1, "model": {"classical": {"gamma": 0.3, "mu": 0.15, "alpha": 2.0}}}"#;
    let report = run_json(&["classical", "algebra"], config);
    assert_eq!(report["scaling_commutator"]["exactly_zero"], true);
    assert_eq!(report["scaling_commutator"]["max_abs"].as_f64(), Some(0.0));
    assert_eq!(report["dilation"]["canonical"], false);
    assert_eq!(report["dilation"]["jacobian_det"].as_f64(), Some(4.0));
}

#[test]
fn evolve_csv_round_trips_the_json_coefficients() {
    let csv_path = scratch_path("trajectory.csv");
    let report = run_json(
        &["evolve", "--csv", csv_path.to_str().unwrap()],
        EVOLVE_CONFIG,
    );

    let dfls = report["dfls"].as_array().unwrap();
    let free: Vec<bool> = dfls
        .iter()
        .map(|b| b["decoherence_free"].as_bool().unwrap())
        .collect();
    assert_eq!(free, [true, false], "only the five-string block stays protected");

    let csv = std::fs::read_to_string(&csv_path).expect("CSV side output exists");
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,"));
    let labels = report["labels"].as_array().unwrap().len();
    let times = report["times"].as_array().unwrap();
    let coefficients = report["coefficients"].as_array().unwrap();
    for (row_idx, line) in lines.enumerate() {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), labels + 1);
        assert_eq!(
            fields[0],
            times[row_idx].as_f64().unwrap(),
            "the 17-digit CSV time must parse back to the exact f64"
        );
        for (col_idx, field) in fields[1..].iter().enumerate() {
            let from_json = coefficients[row_idx][col_idx].as_f64().unwrap();
            assert_eq!(*field, from_json, "CSV and JSON must carry the same f64");
        }
    }

    let _ = std::fs::remove_file(&csv_path);
}

#[test]
fn vectorized_dump_labels_every_matrix_unit() {
    let report = run_json(&["liouvillian", "--basis", "vectorized"], REDUCED_CONFIG);
    assert_eq!(report["dim"], 4);
    assert_eq!(report["labels"].as_array().unwrap().len(), 16);
    assert_eq!(report["labels"][1], "1,0");
    assert_eq!(report["matrix"].as_array().unwrap().len(), 16);

    let bloch = run_json(&["liouvillian", "--basis", "pauli"], REDUCED_CONFIG);
    let sizes: Vec<usize> = bloch["blocks"]["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b.as_array().unwrap().len())
        .collect();
    assert_eq!(sizes, [5, 10], "the quiet point splits the Bloch generator");
}
