use std::fs;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn analytic_prints_closed_form_and_winding() {
    let o = qwalk(&[
        "analytic", "--g", "2,1", "--omega", "8", "--n", "5", "--gamma", "25",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let closed = v["closed_form"].as_array().unwrap();
    let winding = v["winding"].as_array().unwrap();
    assert!((closed[0].as_f64().unwrap() + 0.4822).abs() < 1e-4);
    assert!((closed[1].as_f64().unwrap() + 0.1664).abs() < 1e-4);
    for (a, b) in closed.iter().zip(winding) {
        assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-6);
    }

    let o = qwalk(&["analytic", "--omega", "3", "--n", "4"]);
    let v = stdout_json(&o);
    assert_eq!(v["closed_form"], json!([-1.0]));
    assert!((v["classical"].as_f64().unwrap() + 2.0 / 3.5).abs() < 1e-12);
}

#[test]
fn preset_emits_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig7.json");
    let o = qwalk(&[
        "preset",
        "fig7",
        "--emit-config",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["control"], json!("qubit_dephase"));
    assert_eq!(v["control_values"], json!([0.0, 1.0, 10.0, 100.0]));
}

#[test]
fn sweep_writes_csv_and_signals_failures() {
    let dir = tempfile::tempdir().unwrap();
    let spec = |values: Value| {
        json!({
            "base": {"couplings": [1.0], "drive": 0.0, "detuning": 1e-4, "qubit_decay": 4.0,
                     "qubit_dephase": 0.0, "initial_photon": 4},
            "control": "omega",
            "control_values": values,
            "initial_state": "fock",
            "oracles": ["analytic", "classical"]
        })
    };
    let cfg = dir.path().join("ok.json");
    let out = dir.path().join("ok.csv");
    fs::write(&cfg, spec(json!([1.0, 6.0])).to_string()).unwrap();
    let args = |c: &std::path::Path, o: &std::path::Path| {
        vec![
            "sweep".to_string(),
            c.display().to_string(),
            "--out".into(),
            o.display().to_string(),
            "--strict-bitrepro".into(),
        ]
    };
    let run = |a: Vec<String>| {
        Command::new(env!("CARGO_BIN_EXE_qwalk"))
            .args(a)
            .output()
            .unwrap()
    };
    let o = run(args(&cfg, &out));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("# qwalk "));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
    assert_eq!(code(&run(args(&cfg, &out))), 0);
    assert_eq!(fs::read(&out).unwrap(), first);

    // Ω = 2g√N = 4 is a critical point of the analytic oracle
    let bad = dir.path().join("bad.json");
    fs::write(&bad, spec(json!([1.0, 4.0])).to_string()).unwrap();
    let o = run(args(&bad, &dir.path().join("bad.csv")));
    assert_eq!(code(&o), 1);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    fs::write(
        &cfg,
        json!({
            "base": {"couplings": [1.0], "drive": 0.0, "detuning": 0.0, "qubit_decay": 4.0,
                     "qubit_dephase": 0.0, "initial_photon": 4},
            "control": "omega", "control_values": [1.0], "initial_state": "fock",
            "oracles": ["analytic"], "sed": 3
        })
        .to_string(),
    )
    .unwrap();
    assert_eq!(code(&qwalk(&["sweep", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&qwalk(&["sweep", "/nonexistent/spec.json"])), 2);
    assert_eq!(code(&qwalk(&["preset", "fig6", "--run"])), 2);
    assert_eq!(code(&qwalk(&["analytic", "--omega", "3"])), 2);
    assert_eq!(code(&qwalk(&["analytic", "--omega", "-3", "--n", "4"])), 2);
}

#[test]
fn evolve_and_mc_single_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("point.json");
    fs::write(
        &cfg,
        json!({
            "params": {"couplings": [1.0], "drive": 1.0, "detuning": 1e-4, "qubit_decay": 4.0,
                       "qubit_dephase": 0.0, "initial_photon": 1},
            "trajectories": {"trajectories": 400, "seed": 1, "jump_dt": 0.02, "max_halvings": 6}
        })
        .to_string(),
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let o = qwalk(&["evolve", path, "--single"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let det = stdout_json(&o);
    let total = det["record"]["decayed_total"].as_f64().unwrap()
        + det["record"]["surviving_trace"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-6);

    let o = qwalk(&["evolve", path]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["richardson_error"].as_f64().unwrap() < 1e-4);

    let a = qwalk(&["mc", path, "--trajectories", "300", "--seed", "9"]);
    let b = qwalk(&["mc", path, "--trajectories", "300", "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let mc = stdout_json(&a);
    assert_eq!(mc["trajectories"], json!(300));
    assert_eq!(mc["seed"], json!(9));
    let mean = mc["mean_photons"][0].as_f64().unwrap();
    let err = mc["mean_photon_stderr"][0].as_f64().unwrap();
    let exact = det["mean_photons"][0].as_f64().unwrap();
    assert!(
        (mean - exact).abs() < 4.0 * err,
        "{mean} ± {err} vs {exact}"
    );
}
