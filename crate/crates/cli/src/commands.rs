//! The four subcommands: time-marching runs, convergence studies, kernel
//! scaling scans, and dissipation audits.

use std::path::Path;

use chsplit_core::diagnostics::{expected_kernel_exponent, fit_scaling_exponent, kernel_norms};
use chsplit_core::harness::HarnessError;
use chsplit_core::{
    convergence_study, dissipation_experiment, run, ExperimentSpec, Grid, KernelVariant, Trajectory,
};
use serde_json::{json, Value};

use crate::artifact::{
    csv_document, fmt_f64, write_config_echo, write_summary, write_text, RunArtifact, Verdict,
};
use crate::config::{ConfigFile, SchemeKindCfg};
use crate::CliError;

const SERIES_HEADER: &str = "step,time,mass,l2,l4,h1,energy,residual,linf";

type DiagColumn = fn(&chsplit_core::DiagnosticsRecord) -> f64;

fn series_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.records
        .iter()
        .map(|r| {
            let d = &r.diagnostics;
            vec![
                r.step_index.to_string(),
                fmt_f64(r.time),
                fmt_f64(d.mass),
                fmt_f64(d.l2),
                fmt_f64(d.l4),
                fmt_f64(d.h1),
                fmt_f64(d.energy),
                fmt_f64(d.residual),
                fmt_f64(d.linf),
            ]
        })
        .collect()
}

fn series_extrema(traj: &Trajectory) -> Value {
    let columns: [(&str, DiagColumn); 7] = [
        ("mass", |d| d.mass),
        ("l2", |d| d.l2),
        ("l4", |d| d.l4),
        ("h1", |d| d.h1),
        ("energy", |d| d.energy),
        ("residual", |d| d.residual),
        ("linf", |d| d.linf),
    ];
    let mut out = serde_json::Map::new();
    for (name, get) in columns {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in &traj.records {
            let v = get(&r.diagnostics);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        out.insert(name.to_string(), json!({ "min": lo, "max": hi }));
    }
    Value::Object(out)
}

fn diagnostics_json(d: &chsplit_core::DiagnosticsRecord) -> Value {
    json!({
        "mass": d.mass,
        "l2": d.l2,
        "l4": d.l4,
        "h1": d.h1,
        "energy": d.energy,
        "residual": d.residual,
        "linf": d.linf,
    })
}

/// `run`: time-march the configured scheme; write the per-step diagnostics
/// table, field snapshots, and a summary.
pub fn cmd_run(config: &ConfigFile, out_dir: &Path) -> Result<(Verdict, RunArtifact), CliError> {
    let grid_section = config.grid()?;
    let scheme_section = config.scheme()?;
    let experiment = config.experiment()?;
    let data_cfg = experiment
        .initial_data
        .as_ref()
        .ok_or_else(|| CliError::config("experiment.initial_data", "required for this command"))?;

    let n_points = grid_section.n_points;
    if n_points < 8 || n_points % 2 != 0 {
        return Err(CliError::config(
            "grid.n_points",
            format!("must be even and at least 8, got {n_points}"),
        ));
    }
    let scheme_cfg = scheme_section.to_core_config(n_points)?;
    data_cfg.validate("experiment.initial_data", Some((n_points / 2) as u32))?;

    let snapshot_every = match config.output.as_ref().and_then(|o| o.snapshot_every) {
        Some(k) => k as usize,
        None => (scheme_cfg.n_steps / 100).max(1),
    };

    // resolved configuration: randomness pinned, defaults filled
    let mut echo = config.clone();
    if let Some(exp) = echo.experiment.as_mut() {
        exp.initial_data = Some(data_cfg.materialized());
    }
    if let Some(s) = echo.scheme.as_mut() {
        s.substep = Some(scheme_section.substep.unwrap_or_default());
    }
    echo.output = Some(crate::config::OutputSection {
        snapshot_every: Some(snapshot_every as u64),
    });

    let grid = Grid::new(n_points);
    let u0 = data_cfg.to_core().realize(&grid);
    let traj = run(&u0, &scheme_cfg, snapshot_every);

    write_config_echo(out_dir, &echo)?;
    let series_path = out_dir.join("series.csv");
    write_text(
        &series_path,
        &csv_document(SERIES_HEADER, &series_rows(&traj)),
    )?;

    let snapshots_dir = out_dir.join("snapshots");
    for r in &traj.records {
        if let Some(field) = &r.field_snapshot {
            let rows: Vec<Vec<String>> = field
                .grid()
                .nodes()
                .zip(field.values())
                .map(|(x, &u)| vec![fmt_f64(x), fmt_f64(u)])
                .collect();
            write_text(
                &snapshots_dir.join(format!("snap_{}.csv", r.step_index)),
                &csv_document("x,u", &rows),
            )?;
        }
    }

    let mut failures = Vec::new();
    let verdict = match &traj.failure {
        None => Verdict::Pass,
        Some(f) => {
            failures.push(format!("step {}: {}", f.step_index, f.error));
            Verdict::RuntimeFailure
        }
    };
    let results = json!({
        "steps_completed": traj.records.last().map(|r| r.step_index).unwrap_or(0),
        "final": diagnostics_json(&traj.final_record().diagnostics),
        "extrema": series_extrema(&traj),
    });
    let report_path = write_summary(out_dir, &echo, results, verdict, &failures)?;

    Ok((
        verdict,
        RunArtifact {
            config_echo: echo,
            series_path,
            snapshots_path: Some(snapshots_dir),
            report_path,
        },
    ))
}

fn default_band(kind: SchemeKindCfg) -> (f64, f64) {
    match kind {
        SchemeKindCfg::StrangLnl => (1.85, 2.15),
        _ => (0.85, 1.15),
    }
}

/// `converge`: τ-ladder error study against a self-converged reference.
pub fn cmd_converge(
    config: &ConfigFile,
    out_dir: &Path,
) -> Result<(Verdict, RunArtifact), CliError> {
    let grid_section = config.grid()?;
    let scheme_section = config.scheme()?;
    let experiment = config.experiment()?;
    let data_cfg = experiment
        .initial_data
        .as_ref()
        .ok_or_else(|| CliError::config("experiment.initial_data", "required for this command"))?;
    let horizon = experiment
        .horizon
        .ok_or_else(|| CliError::config("experiment.horizon", "required for this command"))?;
    let taus = experiment
        .taus
        .as_ref()
        .ok_or_else(|| CliError::config("experiment.taus", "required for this command"))?;

    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::config(
            "experiment.horizon",
            format!("must be positive and finite, got {horizon}"),
        ));
    }
    if taus.len() < 4 {
        return Err(CliError::config(
            "experiment.taus",
            format!("ladder needs at least 4 step sizes, got {}", taus.len()),
        ));
    }
    for (i, &tau) in taus.iter().enumerate() {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CliError::config(
                format!("experiment.taus[{i}]"),
                format!("must be positive and finite, got {tau}"),
            ));
        }
        let n = (horizon / tau).round();
        if n < 1.0 || (n * tau - horizon).abs() > 1e-9 * horizon.max(tau) {
            return Err(CliError::config(
                format!("experiment.taus[{i}]"),
                format!("{tau} does not divide the horizon {horizon}"),
            ));
        }
    }
    let n_points = grid_section.n_points;
    data_cfg.validate("experiment.initial_data", Some((n_points / 2) as u32))?;
    let band = experiment
        .tolerance_band
        .unwrap_or_else(|| default_band(scheme_section.kind));

    let mut echo = config.clone();
    if let Some(exp) = echo.experiment.as_mut() {
        exp.initial_data = Some(data_cfg.materialized());
        exp.tolerance_band = Some(band);
    }
    if let Some(s) = echo.scheme.as_mut() {
        s.substep = Some(scheme_section.substep.unwrap_or_default());
    }
    write_config_echo(out_dir, &echo)?;

    let spec = ExperimentSpec {
        initial_data: data_cfg.to_core(),
        nu: scheme_section.nu,
        horizon,
        scheme: scheme_section.kind.to_core(),
        tolerance_band: band,
    };
    let grid = Grid::new(n_points);
    let substep = scheme_section.substep.unwrap_or_default().to_core();

    let report = match convergence_study(&spec, &grid, taus, &substep) {
        Ok(r) => r,
        Err(
            e @ (HarnessError::ReferenceNotConverged { .. }
            | HarnessError::ReferenceStepFailed { .. }),
        ) => {
            // error artifact carrying the failed self-convergence evidence
            let failures = vec![e.to_string()];
            let report_path = write_summary(
                out_dir,
                &echo,
                json!({ "reference_tolerance": chsplit_core::harness::REFERENCE_L2_TOL }),
                Verdict::RuntimeFailure,
                &failures,
            )?;
            return Ok((
                Verdict::RuntimeFailure,
                RunArtifact {
                    config_echo: echo,
                    series_path: report_path.clone(),
                    snapshots_path: None,
                    report_path,
                },
            ));
        }
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };

    let mut rows = Vec::new();
    for (i, (&tau, &err)) in report.taus.iter().zip(&report.errors).enumerate() {
        let pairwise = if i == 0 {
            String::new()
        } else {
            fmt_f64(report.pairwise_orders[i - 1])
        };
        rows.push(vec![fmt_f64(tau), fmt_f64(err), pairwise]);
    }
    let series_path = out_dir.join("convergence.csv");
    write_text(
        &series_path,
        &csv_document("tau,error_l2,pairwise_order", &rows),
    )?;

    let failures: Vec<String> = report
        .failures
        .iter()
        .map(|f| format!("tau {}: {}", f.tau, f.reason))
        .collect();
    let verdict = if report.pass {
        Verdict::Pass
    } else {
        Verdict::CheckFailed
    };
    let results = json!({
        "taus": report.taus,
        "errors_l2": report.errors,
        "pairwise_orders": report.pairwise_orders,
        "fitted_order": report.fitted_order,
        "tolerance_band": band,
        "pass": report.pass,
        "reference": report.reference.map(|c| json!({
            "tau_ref": c.tau_ref,
            "n_steps": c.n_steps,
            "self_convergence_gap": c.self_convergence_gap,
        })),
    });
    let report_path = write_summary(out_dir, &echo, results, verdict, &failures)?;

    Ok((
        verdict,
        RunArtifact {
            config_echo: echo,
            series_path,
            snapshots_path: None,
            report_path,
        },
    ))
}

const KERNEL_EXPONENT_TOL: f64 = 0.05;

/// `kernel-scan`: norms of the semigroup kernels over a β ladder with fitted
/// scaling exponents per (variant, p).
pub fn cmd_kernel_scan(
    config: &ConfigFile,
    out_dir: &Path,
) -> Result<(Verdict, RunArtifact), CliError> {
    let experiment = config.experiment()?;
    let kernel = experiment
        .kernel
        .as_ref()
        .ok_or_else(|| CliError::config("experiment.kernel", "required for this command"))?;

    if !(kernel.nu > 0.0 && kernel.nu.is_finite()) {
        return Err(CliError::config(
            "experiment.kernel.nu",
            format!("must be positive and finite, got {}", kernel.nu),
        ));
    }
    let validate_ladder = |betas: &[f64], path: &str| -> Result<(), CliError> {
        if betas.len() < 3 {
            return Err(CliError::config(
                path.to_string(),
                format!("ladder needs at least 3 values, got {}", betas.len()),
            ));
        }
        for (i, &b) in betas.iter().enumerate() {
            if !(b > 0.0 && b <= 1.0) {
                return Err(CliError::config(
                    format!("{path}[{i}]"),
                    format!("beta must lie in (0, 1], got {b}"),
                ));
            }
        }
        let (lo, hi) = betas.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &b| {
            (lo.min(b), hi.max(b))
        });
        if (hi / lo).log10() < 2.0 - 1e-9 {
            return Err(CliError::config(
                path.to_string(),
                "ladder must span at least 2 decades",
            ));
        }
        Ok(())
    };
    validate_ladder(&kernel.betas, "experiment.kernel.betas")?;
    if kernel.scans.is_empty() {
        return Err(CliError::config(
            "experiment.kernel.scans",
            "at least one (variant, p) pair is required",
        ));
    }
    for (i, scan) in kernel.scans.iter().enumerate() {
        if let Some(betas) = &scan.betas {
            validate_ladder(betas, &format!("experiment.kernel.scans[{i}].betas"))?;
        }
    }

    let echo = config.clone();
    write_config_echo(out_dir, &echo)?;

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    let mut all_expected_ok = true;
    let mut runtime_failure = false;

    for (i, scan) in kernel.scans.iter().enumerate() {
        let p = scan.p.resolve(&format!("experiment.kernel.scans[{i}].p"))?;
        let variant = scan.variant.to_core();
        let betas = scan.betas.as_ref().unwrap_or(&kernel.betas);
        let mut samples = Vec::with_capacity(betas.len());
        let mut scan_failed = false;
        for &beta in betas {
            match kernel_norms(beta, kernel.nu, p, variant) {
                Ok(norm) => {
                    rows.push(vec![
                        fmt_f64(beta),
                        scan.p.label(),
                        scan.variant.label().to_string(),
                        fmt_f64(norm),
                    ]);
                    samples.push((beta, norm));
                }
                Err(e) => {
                    failures.push(format!(
                        "variant {} p {}: {e}",
                        scan.variant.label(),
                        scan.p.label()
                    ));
                    scan_failed = true;
                    runtime_failure = true;
                    break;
                }
            }
        }
        if scan_failed {
            continue;
        }
        let slope = fit_scaling_exponent(&samples).map_err(|e| CliError::Runtime(e.to_string()))?;
        // report the exponent in the orientation of the predicted value:
        // growth for the plain kernel, decay for the second-derivative one
        let fitted = match variant {
            KernelVariant::Plain => slope,
            KernelVariant::SecondDeriv => -slope,
        };
        let expected = expected_kernel_exponent(variant, p);
        let deviation = expected.map(|e| fitted - e);
        let pass = deviation.map(|d| d.abs() <= KERNEL_EXPONENT_TOL);
        if pass == Some(false) {
            all_expected_ok = false;
            failures.push(format!(
                "variant {} p {}: fitted exponent {:.4} deviates from {:.4} by more than {}",
                scan.variant.label(),
                scan.p.label(),
                fitted,
                expected.unwrap(),
                KERNEL_EXPONENT_TOL
            ));
        }
        fits.push(json!({
            "variant": scan.variant.label(),
            "p": scan.p.label(),
            "fitted_exponent": fitted,
            "expected_exponent": expected,
            "deviation": deviation,
            "pass": pass,
        }));
    }

    let series_path = out_dir.join("kernel_norms.csv");
    write_text(&series_path, &csv_document("beta,p,variant,norm", &rows))?;

    let verdict = if runtime_failure {
        Verdict::RuntimeFailure
    } else if all_expected_ok {
        Verdict::Pass
    } else {
        Verdict::CheckFailed
    };
    let results = json!({
        "nu": kernel.nu,
        "betas": kernel.betas,
        "exponent_tolerance": KERNEL_EXPONENT_TOL,
        "fits": fits,
    });
    let report_path = write_summary(out_dir, &echo, results, verdict, &failures)?;

    Ok((
        verdict,
        RunArtifact {
            config_echo: echo,
            series_path,
            snapshots_path: None,
            report_path,
        },
    ))
}

/// `dissipation`: per-step energy audit with flagged-step verdict.
pub fn cmd_dissipation(
    config: &ConfigFile,
    out_dir: &Path,
) -> Result<(Verdict, RunArtifact), CliError> {
    let grid_section = config.grid()?;
    let scheme_section = config.scheme()?;
    let experiment = config.experiment()?;
    let data_cfg = experiment
        .initial_data
        .as_ref()
        .ok_or_else(|| CliError::config("experiment.initial_data", "required for this command"))?;

    let n_points = grid_section.n_points;
    let scheme_cfg = scheme_section.to_core_config(n_points)?;
    data_cfg.validate("experiment.initial_data", Some((n_points / 2) as u32))?;

    let mut echo = config.clone();
    if let Some(exp) = echo.experiment.as_mut() {
        exp.initial_data = Some(data_cfg.materialized());
    }
    if let Some(s) = echo.scheme.as_mut() {
        s.substep = Some(scheme_section.substep.unwrap_or_default());
    }
    write_config_echo(out_dir, &echo)?;

    let grid = Grid::new(n_points);
    let u0 = data_cfg.to_core().realize(&grid);
    let report = dissipation_experiment(&u0, &scheme_cfg);

    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.step.to_string(),
                fmt_f64(r.energy),
                fmt_f64(r.residual),
                r.flagged.to_string(),
                r.strict_decrease.to_string(),
            ]
        })
        .collect();
    let series_path = out_dir.join("dissipation.csv");
    write_text(
        &series_path,
        &csv_document("step,energy,residual,flagged,strict_decrease", &rows),
    )?;

    let mut failures = Vec::new();
    let verdict = if let Some(f) = &report.failure {
        failures.push(f.clone());
        Verdict::RuntimeFailure
    } else if report.all_flagged_strictly_decreased {
        Verdict::Pass
    } else {
        failures.push("a flagged step did not strictly decrease the energy".to_string());
        Verdict::CheckFailed
    };
    let results = json!({
        "steps": report.rows.len(),
        "flagged_steps": report.flagged_steps,
        "all_flagged_strictly_decreased": report.all_flagged_strictly_decreased,
        "vacuous": report.flagged_steps == 0,
        "final_energy": report.final_energy,
        "tail_start": report.tail_start,
        "tail_max_energy": report.tail_max_energy,
    });
    let report_path = write_summary(out_dir, &echo, results, verdict, &failures)?;

    Ok((
        verdict,
        RunArtifact {
            config_echo: echo,
            series_path,
            snapshots_path: None,
            report_path,
        },
    ))
}
