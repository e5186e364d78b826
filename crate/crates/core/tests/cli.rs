use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use oddpu::dynamics::{jet_index, TrajectoryTable};
use serde_json::Value;

fn oddpu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oddpu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("json output")
}

fn table(out: &Output) -> TrajectoryTable {
    TrajectoryTable::from_csv(&stdout(out)).expect("csv output")
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v["matrix"].clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn spectrum_single_mode_has_unit_residue() {
    let out = oddpu(&["spectrum", "--omegas", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["rho"][0], 1.0);
}

#[test]
fn spectrum_two_modes_pass_identities() {
    let out = oddpu(&["spectrum", "--omegas", "1,2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    for check in v["identities"]["checks"].as_array().unwrap() {
        assert!(check["max_rel"].as_f64().unwrap() <= 1e-8, "{check}");
    }
}

#[test]
fn spectrum_rejects_coincident_frequencies() {
    let out = oddpu(&["spectrum", "--omegas", "1,1"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn structure_without_gamma_is_the_third_order_dirac_bracket() {
    let out = oddpu(&["structure", "--omegas", "1"]);
    assert_eq!(code(&out), 0);
    let m = matrix(&json(&out));
    assert_eq!(m[jet_index(1, 0)][jet_index(1, 1)], 1.0);
    assert_eq!(m[jet_index(1, 1)][jet_index(1, 0)], -1.0);
    assert_eq!(m[jet_index(0, 0)][jet_index(0, 1)], 0.0);
}

#[test]
fn structure_with_equal_weights_is_degenerate() {
    let out = oddpu(&["structure", "--omegas", "1", "--gamma", "1,1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["degenerate"], true);
    assert_eq!(v["rank"], 4);
}

#[test]
fn structure_with_dirac_weights_reproduces_dirac() {
    let dirac = matrix(&json(&oddpu(&["structure", "--omegas", "1"])));
    let alt = matrix(&json(&oddpu(&["structure", "--omegas", "1", "--gamma=1,-1"])));
    for (a, d) in alt.iter().flatten().zip(dirac.iter().flatten()) {
        assert!((a - d).abs() <= 1e-12, "{a} vs {d}");
    }
}

#[test]
fn structure_rejects_wrong_gamma_length() {
    assert_eq!(code(&oddpu(&["structure", "--omegas", "1,2", "--gamma", "1,2,3"])), 2);
}

#[test]
fn simulate_zero_state_stays_zero() {
    let out = oddpu(&["simulate", "--omegas", "1,2", "--state", "0,0,0,0,0,0,0,0,0,0", "--t-end", "1", "--dt", "0.1"]);
    assert_eq!(code(&out), 0);
    let t = table(&out);
    assert_eq!(t.len(), 11);
    for row in t.rows() {
        assert!(row.u.iter().chain(&row.values).all(|v| *v == 0.0));
    }
}

#[test]
fn simulate_single_velocity_kick_has_zero_energy_and_half_integrals() {
    let out = oddpu(&["simulate", "--omegas", "1", "--state", "0,0,1,0,0,0", "--t-end", "20", "--dt", "0.5"]);
    assert_eq!(code(&out), 0);
    let t = table(&out);
    assert_eq!(t.observables(), ["H", "J_0_1", "J_0_2"]);
    for v in t.column("H").unwrap() {
        assert!(v.abs() <= 1e-12);
    }
    for name in ["J_0_1", "J_0_2"] {
        for v in t.column(name).unwrap() {
            assert!((v - 0.5).abs() <= 1e-12, "{name} = {v}");
        }
    }
}

#[test]
fn simulate_conserves_energies_over_long_horizon() {
    let out = oddpu(&[
        "simulate",
        "--omegas",
        "0.7,1.3",
        "--gamma=2,0.5,-1,1.5",
        "--state=0.3,-0.2,0.5,0.1,-0.4,0.2,0.1,0.3,-0.2,0.05",
        "--t-end",
        "100",
        "--dt",
        "0.1",
    ]);
    assert_eq!(code(&out), 0);
    let t = table(&out);
    assert_eq!(t.len(), 1001);
    for name in t.observables() {
        let col = t.column(name).unwrap();
        let scale = 1.0 + col[0].abs();
        assert!(t.drift(name).unwrap() <= 1e-9 * scale, "{name}");
    }
}

#[test]
fn simulate_rejects_wrong_state_length() {
    assert_eq!(code(&oddpu(&["simulate", "--omegas", "1", "--state", "1,2,3"])), 2);
}

#[test]
fn csv_round_trips_byte_for_byte() {
    let out = oddpu(&["simulate", "--omegas", "1,2.5", "--gamma=1,2,3,4", "--state=1,0,0,1,0.5,0,0,0,0,-1", "--t-end", "3", "--dt", "0.3"]);
    let text = stdout(&out);
    assert_eq!(TrajectoryTable::from_csv(&text).unwrap().to_csv(), text);
}

#[test]
fn deform_without_potential_tracks_exact_flow() {
    let args = ["--omegas", "1,1.8", "--gamma=1,-1,-1,1", "--state=0.2,0.1,0,0.3,-0.1,0,0.05,0,0,0.1", "--t-end", "5", "--dt", "0.01"];
    let exact = table(&oddpu(&[&["simulate"], &args[..]].concat()));
    let stepped = table(&oddpu(&[&["deform"], &args[..]].concat()));
    assert_eq!(exact.len(), stepped.len());
    for (a, b) in exact.rows().iter().zip(stepped.rows()) {
        assert_eq!(a.t, b.t);
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!((x - y).abs() <= 1e-8, "t={} {x} vs {y}", a.t);
        }
    }
    let u = stepped.column("U").unwrap();
    assert!(u.iter().all(|v| *v == 0.0));
}

#[test]
fn deform_quartic_energy_error_converges_at_fourth_order() {
    let dir = tempfile::tempdir().unwrap();
    let potential = write(
        dir.path(),
        "u.json",
        r#"{"degree":4,"coeffs":[{"i":4,"j":0,"value":0.05},{"i":2,"j":2,"value":0.1},{"i":0,"j":4,"value":0.05}]}"#,
    );
    let drift = |dt: &str| {
        let out = oddpu(&[
            "deform",
            "--omegas",
            "1",
            "--gamma=1,-1",
            "--state=0.4,-0.3,0.2,0.5,-0.1,0.3",
            "--potential",
            &potential,
            "--t-end",
            "10",
            "--dt",
            dt,
        ]);
        assert_eq!(code(&out), 0);
        table(&out).drift("Htilde").unwrap()
    };
    let (coarse, fine) = (drift("0.02"), drift("0.01"));
    assert!(fine > 0.0);
    let order = (coarse / fine).log2();
    assert!(order >= 3.8, "order {order}");
}

#[test]
fn deform_rejects_degenerate_weights() {
    let out = oddpu(&["deform", "--omegas", "1", "--gamma", "1,1", "--state", "1,0,0,0,0,0"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate structure"));
}

#[test]
fn deform_accepts_inline_potential() {
    let out = oddpu(&[
        "deform",
        "--omegas",
        "1",
        "--state",
        "0.1,0,0,0.1,0,0",
        "--potential",
        r#"{"degree":2,"coeffs":[{"i":1,"j":1,"value":0.5}]}"#,
        "--t-end",
        "1",
        "--dt",
        "0.1",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(table(&out).observables(), ["Hcal", "U", "Htilde"]);
}

#[test]
fn verify_minimal_suite_passes() {
    let out = oddpu(&["verify", "--n-max", "1", "--trials", "1", "--seed", "42"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 9);
}

#[test]
fn verify_output_is_deterministic() {
    let args = ["verify", "--n-max", "2", "--trials", "2", "--seed", "7"];
    assert_eq!(stdout(&oddpu(&args)), stdout(&oddpu(&args)));
}

#[test]
fn verify_standard_size_runs_within_budget() {
    let start = Instant::now();
    let out = oddpu(&["verify", "--n-max", "4", "--trials", "20", "--seed", "42"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(start.elapsed().as_secs_f64() <= 60.0);
}

#[test]
fn malformed_config_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", "{\"command\": \"verify\", ");
    assert_eq!(code(&oddpu(&["--config", &path])), 2);
}

#[test]
fn config_file_drives_the_run_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "run.json", r#"{"command":"spectrum","omegas":[1,2]}"#);
    let from_file = json(&oddpu(&["--config", &path]));
    assert_eq!(from_file["omegas"], serde_json::json!([1.0, 2.0]));
    let overridden = json(&oddpu(&["--config", &path, "--omegas", "3"]));
    assert_eq!(overridden["omegas"], serde_json::json!([3.0]));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("s.json");
    let out = oddpu(&["structure", "--omegas", "1", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["n"], 1);
}
