//! End-to-end tests of the `chsplit` binary: exit codes, artifact layout,
//! and reproducibility of emitted configurations.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn chsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chsplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn run_with_zero_steps_emits_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0, "tau": 0.01, "n_steps": 0 },
            "experiment": { "initial_data": { "single_mode": { "amplitude": 0.1, "wavenumber": 1 } } },
            "output": {}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");

    let series = read(&out_dir.join("series.csv"));
    let lines: Vec<&str> = series.trim_end().lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one row: {series}");
    assert!(lines[0].starts_with("step,time,mass"));
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn zero_initial_data_gives_zero_columns_and_flat_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0, "tau": 0.01, "n_steps": 5 },
            "experiment": { "initial_data": { "trig_poly": { "modes": [] } } }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");

    let series = read(&out_dir.join("series.csv"));
    for line in series.trim_end().lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse::<f64>().unwrap()).collect();
        // step,time,mass,l2,l4,h1,energy,residual,linf
        for idx in [2usize, 3, 4, 5, 7, 8] {
            assert_eq!(cells[idx], 0.0, "column {idx} of {line}");
        }
        assert!((cells[6] - PI / 2.0).abs() < 1e-14, "energy {}", cells[6]);
    }
}

#[test]
fn rerunning_the_emitted_echo_reproduces_the_series_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 64 },
            "scheme": { "kind": "strang_lnl", "nu": 0.8, "tau": 0.005, "n_steps": 30 },
            "experiment": { "initial_data": { "random_bandlimited": { "seed": 11, "band": 5, "amplitude": 0.6 } } },
            "output": { "snapshot_every": 10 }
        }"#,
    );
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    assert_eq!(
        exit_code(&chsplit(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out1.to_str().unwrap()
        ])),
        0
    );
    let echo = out1.join("config_echo.json");
    // the echo must carry pinned coefficients, not the seed
    assert!(read(&echo).contains("trig_poly"));
    assert_eq!(
        exit_code(&chsplit(&[
            "run",
            "--config",
            echo.to_str().unwrap(),
            "--out",
            out2.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        read(&out1.join("series.csv")),
        read(&out2.join("series.csv"))
    );
    assert_eq!(
        read(&out1.join("snapshots/snap_30.csv")),
        read(&out2.join("snapshots/snap_30.csv"))
    );
}

#[test]
fn series_numbers_round_trip_through_their_text_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0, "tau": 0.01, "n_steps": 10 },
            "experiment": { "initial_data": { "single_mode": { "amplitude": 0.4, "wavenumber": 2 } } }
        }"#,
    );
    let out_dir = dir.path().join("out");
    assert_eq!(
        exit_code(&chsplit(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap()
        ])),
        0
    );
    for line in read(&out_dir.join("series.csv")).trim_end().lines().skip(1) {
        for cell in line.split(',').skip(1) {
            let x: f64 = cell.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), cell, "cell {cell} must be canonical");
        }
    }
}

#[test]
fn converge_small_study_passes_at_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 64 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0 },
            "experiment": {
                "initial_data": { "single_mode": { "amplitude": 0.1, "wavenumber": 1 } },
                "horizon": 0.25,
                "taus": [0.03125, 0.015625, 0.0078125, 0.00390625]
            }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");

    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    assert_eq!(summary["verdict"], "pass");
    let fitted = summary["results"]["fitted_order"].as_f64().unwrap();
    assert!((1.85..=2.15).contains(&fitted), "fitted {fitted}");
    assert!(
        summary["results"]["reference"]["self_convergence_gap"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-10
    );

    let table = read(&out_dir.join("convergence.csv"));
    assert!(table.starts_with("tau,error_l2,pairwise_order\n"));
    assert_eq!(table.trim_end().lines().count(), 5);
}

#[test]
fn converge_rejects_short_or_nondividing_ladders() {
    let dir = tempfile::tempdir().unwrap();
    let short = write_config(
        dir.path(),
        "short.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0 },
            "experiment": {
                "initial_data": { "single_mode": { "amplitude": 0.1, "wavenumber": 1 } },
                "horizon": 0.25,
                "taus": [0.03125]
            }
        }"#,
    );
    let out = chsplit(&[
        "converge",
        "--config",
        short.to_str().unwrap(),
        "--out",
        dir.path().join("o1").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "{out:?}");

    let nondividing = write_config(
        dir.path(),
        "nd.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0 },
            "experiment": {
                "initial_data": { "single_mode": { "amplitude": 0.1, "wavenumber": 1 } },
                "horizon": 0.25,
                "taus": [0.03125, 0.015625, 0.0078125, 0.0003]
            }
        }"#,
    );
    let out = chsplit(&[
        "converge",
        "--config",
        nondividing.to_str().unwrap(),
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("taus[3]"), "{stderr}");
}

#[test]
fn kernel_scan_passes_on_the_asymptotic_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "experiment": {
                "kernel": {
                    "nu": 1.0,
                    "betas": [1e-4, 3.1623e-4, 1e-3, 3.1623e-3, 1e-2],
                    "scans": [
                        { "variant": "plain", "p": 1.0 },
                        { "variant": "plain", "p": "inf" },
                        { "variant": "second_deriv", "p": 4.0 }
                    ]
                }
            }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "kernel-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");

    let table = read(&out_dir.join("kernel_norms.csv"));
    assert!(table.starts_with("beta,p,variant,norm\n"));
    assert_eq!(table.trim_end().lines().count(), 1 + 3 * 5);
    assert!(table.contains(",inf,plain,"));

    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    for fit in summary["results"]["fits"].as_array().unwrap() {
        assert_eq!(fit["pass"], true, "{fit}");
        assert!(fit["deviation"].as_f64().unwrap().abs() <= 0.05);
    }
}

#[test]
fn kernel_scan_rejects_bad_ladders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "experiment": {
                "kernel": {
                    "betas": [2.0, 0.5, 0.01],
                    "scans": [ { "variant": "plain", "p": 2.0 } ]
                }
            }
        }"#,
    );
    let out = chsplit(&[
        "kernel-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "{out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("betas[0]"));
}

#[test]
fn dissipation_on_near_steady_data_passes_vacuously() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "strang_lnl", "nu": 1.0, "tau": 0.001, "n_steps": 40 },
            "experiment": { "initial_data": { "single_mode": { "amplitude": 0.01, "wavenumber": 1 } } }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "dissipation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");

    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    assert_eq!(summary["verdict"], "pass");
    assert_eq!(summary["results"]["flagged_steps"], 0);
    assert_eq!(summary["results"]["vacuous"], true);
    assert!(read(&out_dir.join("dissipation.csv"))
        .starts_with("step,energy,residual,flagged,strict_decrease\n"));
}

#[test]
fn dissipation_on_rough_data_flags_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 64 },
            "scheme": { "kind": "strang_lnl", "nu": 0.2, "tau": 0.001, "n_steps": 60 },
            "experiment": { "initial_data": { "trig_poly": { "modes": [
                { "k": 1, "cos": 1.0 }, { "k": 2, "cos": 0.5 }
            ] } } }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "dissipation",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    assert!(summary["results"]["flagged_steps"].as_u64().unwrap() > 0);
    assert_eq!(summary["results"]["all_flagged_strictly_decreased"], true);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();

    // unknown key
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{ "grid": { "n_points": 32, "oops": 1 } }"#,
    );
    let out = chsplit(&[
        "run",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o1").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "{out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("oops"));

    // missing section
    let missing = write_config(
        dir.path(),
        "missing.json",
        r#"{ "grid": { "n_points": 32 } }"#,
    );
    let out = chsplit(&[
        "run",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("scheme"));

    // implicit-explicit step-size restriction
    let imex = write_config(
        dir.path(),
        "imex.json",
        r#"{
            "grid": { "n_points": 32 },
            "scheme": { "kind": "imex", "nu": 0.1, "tau": 0.5, "n_steps": 5 },
            "experiment": { "initial_data": { "single_mode": { "amplitude": 0.1, "wavenumber": 1 } } }
        }"#,
    );
    let out = chsplit(&[
        "run",
        "--config",
        imex.to_str().unwrap(),
        "--out",
        dir.path().join("o3").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));

    // unreadable config path
    let out = chsplit(&[
        "run",
        "--config",
        dir.path().join("absent.json").to_str().unwrap(),
        "--out",
        dir.path().join("o4").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn mid_run_failure_leaves_partial_artifacts_and_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 64 },
            "scheme": {
                "kind": "strang_lnl", "nu": 1.0, "tau": 0.5, "n_steps": 10,
                "substep": { "max_substeps": 2 }
            },
            "experiment": { "initial_data": { "single_mode": { "amplitude": 1.0, "wavenumber": 1 } } }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3, "{out:?}");

    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    assert_eq!(summary["verdict"], "runtime-failure");
    assert!(!summary["failures"].as_array().unwrap().is_empty());
    // partial series: the initial record survived
    let series = read(&out_dir.join("series.csv"));
    assert_eq!(series.trim_end().lines().count(), 2);
}

#[test]
fn imex_scheme_runs_within_its_step_restriction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{
            "grid": { "n_points": 64 },
            "scheme": { "kind": "imex", "nu": 1.0, "tau": 0.01, "n_steps": 50 },
            "experiment": { "initial_data": { "single_mode": { "amplitude": 0.5, "wavenumber": 2 } } }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = chsplit(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    let mass = summary["results"]["final"]["mass"].as_f64().unwrap();
    assert!(mass.abs() < 1e-13);
}
