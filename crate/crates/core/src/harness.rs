//! Reference solutions, convergence-order studies, and experiment drivers
//! that turn the solver's analytical guarantees into pass/fail checks.

use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::FitError;
use crate::field::{cube_hat, product3_hat, RealField, SpectralField};
use crate::grid::Grid;
use crate::propagators::{
    imex_step_hat, linear_step_hat, linear_symbol, LinearKind, PropagatorError, SubstepControl,
};
use crate::schemes::{run, step_hat, SchemeConfig, SchemeConfigError, SchemeKind};

/// Self-convergence requirement on a reference solution: halving its step
/// must change the result by less than this in `L²`.
pub const REFERENCE_L2_TOL: f64 = 1e-10;
const REFERENCE_MIN_STEPS: usize = 256;
const REFERENCE_MAX_STEPS: usize = 1 << 21;

/// Rungs whose error falls below this are treated as exact matches and
/// excluded from order fits (their logarithm is meaningless).
pub const ERROR_FLOOR: f64 = 1e-15;

/// Steps whose steady-state residual reaches this threshold are flagged in
/// dissipation experiments: the energy must strictly decrease across them.
pub const RESIDUAL_FLAG_THRESHOLD: f64 = 1.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(
        "reference solve did not self-converge within budget \
         (last gap {last_gap:.3e} at {steps} steps, tolerance {REFERENCE_L2_TOL:.1e})"
    )]
    ReferenceNotConverged { last_gap: f64, steps: usize },
    #[error("reference solve failed at tau = {tau:.3e}: {source}")]
    ReferenceStepFailed { tau: f64, source: PropagatorError },
    #[error("ladder has {survivors} usable rungs, need at least {required}")]
    InsufficientLadder { survivors: usize, required: usize },
    #[error(transparent)]
    Config(#[from] SchemeConfigError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Deterministic initial-data families. Every family is mean-zero by
/// construction (no zero-wavenumber content).
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    SingleMode {
        amplitude: f64,
        wavenumber: u32,
    },
    TrigPoly {
        modes: Vec<TrigMode>,
    },
    /// Cosine and sine coefficients drawn uniformly in `[-amplitude,
    /// amplitude]` for wavenumbers `1..=band` from a seeded generator. Use
    /// [`InitialData::materialize`] to pin the drawn coefficients.
    RandomBandlimited {
        seed: u64,
        band: u32,
        amplitude: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigMode {
    pub wavenumber: u32,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl InitialData {
    /// Resolve the family into explicit trigonometric modes. Random
    /// coefficients are drawn here (cosine then sine, wavenumber ascending),
    /// so the result is reproducible from the seed and can be recorded.
    pub fn materialize(&self) -> Vec<TrigMode> {
        match self {
            InitialData::SingleMode {
                amplitude,
                wavenumber,
            } => {
                assert!(*wavenumber >= 1, "single mode needs wavenumber >= 1");
                vec![TrigMode {
                    wavenumber: *wavenumber,
                    cos_amp: *amplitude,
                    sin_amp: 0.0,
                }]
            }
            InitialData::TrigPoly { modes } => {
                assert!(
                    modes.iter().all(|m| m.wavenumber >= 1),
                    "trig polynomial data must have no zero-wavenumber content"
                );
                modes.clone()
            }
            InitialData::RandomBandlimited {
                seed,
                band,
                amplitude,
            } => {
                assert!(*band >= 1, "random band-limited data needs band >= 1");
                let mut state = *seed;
                (1..=*band)
                    .map(|k| TrigMode {
                        wavenumber: k,
                        cos_amp: amplitude * (2.0 * unit_f64(&mut state) - 1.0),
                        sin_amp: amplitude * (2.0 * unit_f64(&mut state) - 1.0),
                    })
                    .collect()
            }
        }
    }

    /// Sample the field on a grid. All modes must sit strictly inside the
    /// resolved band.
    pub fn realize(&self, grid: &Arc<Grid>) -> RealField {
        let modes = self.materialize();
        let max_k = grid.max_wavenumber() as u32;
        for m in &modes {
            assert!(
                m.wavenumber < max_k,
                "mode {} does not fit strictly inside the band of a {}-point grid",
                m.wavenumber,
                grid.n_points()
            );
        }
        RealField::from_fn(grid, |x| {
            modes
                .iter()
                .map(|m| {
                    let kx = m.wavenumber as f64 * x;
                    m.cos_amp * kx.cos() + m.sin_amp * kx.sin()
                })
                .sum()
        })
    }
}

/// A named experiment: data, mobility, horizon, scheme, and the band the
/// fitted convergence order must fall in.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub initial_data: InitialData,
    pub nu: f64,
    pub horizon: f64,
    pub scheme: SchemeKind,
    pub tolerance_band: (f64, f64),
}

/// Evidence that a reference solution is converged: halving the step from
/// `tau_ref` changed the output by `self_convergence_gap < REFERENCE_L2_TOL`.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceCertificate {
    pub tau_ref: f64,
    pub n_steps: usize,
    pub self_convergence_gap: f64,
}

/// High-accuracy approximation of the flow at a fixed time, with its
/// self-convergence certificate.
#[derive(Debug)]
pub struct ReferenceSolution {
    pub field: RealField,
    pub certificate: ReferenceCertificate,
}

fn march(state0: &SpectralField, cfg: &SchemeConfig) -> Result<SpectralField, PropagatorError> {
    let mut state = state0.clone();
    for _ in 0..cfg.n_steps {
        state = step_hat(&state, cfg)?;
    }
    Ok(state)
}

fn strang_config(
    grid_points: usize,
    nu: f64,
    tau: f64,
    n_steps: usize,
    substep: &SubstepControl,
) -> SchemeConfig {
    SchemeConfig {
        nu,
        tau,
        scheme: SchemeKind::StrangLnl,
        n_steps,
        grid_points,
        substep: *substep,
    }
}

/// Approximate the exact flow at time `horizon` by the symmetric splitting
/// scheme with a step fine enough that halving it changes the result by less
/// than [`REFERENCE_L2_TOL`] in `L²`. The step search doubles the step count
/// from a coarse start until the certificate holds.
pub fn reference_solve(
    u0: &RealField,
    nu: f64,
    horizon: f64,
    substep: &SubstepControl,
) -> Result<ReferenceSolution, HarnessError> {
    assert!(
        horizon >= 0.0 && horizon.is_finite(),
        "horizon must be finite and >= 0"
    );
    if horizon == 0.0 {
        return Ok(ReferenceSolution {
            field: u0.clone(),
            certificate: ReferenceCertificate {
                tau_ref: 0.0,
                n_steps: 0,
                self_convergence_gap: 0.0,
            },
        });
    }

    let grid_points = u0.grid().n_points();
    let hat0 = u0.to_spectral();
    let solve = |n: usize| -> Result<SpectralField, HarnessError> {
        let tau = horizon / n as f64;
        let cfg = strang_config(grid_points, nu, tau, n, substep);
        march(&hat0, &cfg).map_err(|source| HarnessError::ReferenceStepFailed { tau, source })
    };

    let mut n = REFERENCE_MIN_STEPS;
    let mut coarse = solve(n)?;
    loop {
        let fine = solve(2 * n)?;
        let gap = (&coarse - &fine).l2_norm();
        if gap < REFERENCE_L2_TOL {
            return Ok(ReferenceSolution {
                field: fine.to_real_unchecked(),
                certificate: ReferenceCertificate {
                    tau_ref: horizon / (2 * n) as f64,
                    n_steps: 2 * n,
                    self_convergence_gap: gap,
                },
            });
        }
        if 2 * n >= REFERENCE_MAX_STEPS {
            return Err(HarnessError::ReferenceNotConverged {
                last_gap: gap,
                steps: 2 * n,
            });
        }
        coarse = fine;
        n *= 2;
    }
}

/// One rung of a ladder that could not be measured, with the reason.
#[derive(Clone, Debug)]
pub struct LadderFailure {
    pub tau: f64,
    pub reason: String,
}

/// Errors over a step-size ladder with the fitted order.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// Decreasing step sizes that produced a measurement.
    pub taus: Vec<f64>,
    /// One error per entry of `taus`.
    pub errors: Vec<f64>,
    /// `log(e_i/e_{i+1}) / log(τ_i/τ_{i+1})` for consecutive rungs.
    pub pairwise_orders: Vec<f64>,
    /// Least-squares slope of `log e` against `log τ`; NaN when too few
    /// rungs sit above the roundoff floor.
    pub fitted_order: f64,
    /// Whether `fitted_order` lies inside the configured band.
    pub pass: bool,
    pub failures: Vec<LadderFailure>,
    /// Present when the study compared against a self-converged reference.
    pub reference: Option<ReferenceCertificate>,
}

fn assemble_report(
    mut rungs: Vec<(f64, f64)>,
    failures: Vec<LadderFailure>,
    band: (f64, f64),
    reference: Option<ReferenceCertificate>,
) -> Result<ConvergenceReport, HarnessError> {
    if rungs.len() < 3 {
        return Err(HarnessError::InsufficientLadder {
            survivors: rungs.len(),
            required: 3,
        });
    }
    rungs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let taus: Vec<f64> = rungs.iter().map(|r| r.0).collect();
    let errors: Vec<f64> = rungs.iter().map(|r| r.1).collect();

    let pairwise_orders: Vec<f64> = rungs
        .windows(2)
        .map(|w| ((w[0].1 / w[1].1).ln()) / ((w[0].0 / w[1].0).ln()))
        .collect();

    let fit: Vec<(f64, f64)> = rungs
        .iter()
        .copied()
        .filter(|&(_, e)| e > ERROR_FLOOR)
        .collect();
    let fitted_order = if fit.len() >= 3 {
        let xs: Vec<f64> = fit.iter().map(|r| r.0.ln()).collect();
        let ys: Vec<f64> = fit.iter().map(|r| r.1.ln()).collect();
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };

    let pass = fitted_order.is_finite() && band.0 <= fitted_order && fitted_order <= band.1;
    Ok(ConvergenceReport {
        taus,
        errors,
        pairwise_orders,
        fitted_order,
        pass,
        failures,
        reference,
    })
}

/// Run the configured scheme to the horizon for every step size in the
/// ladder, measure the `L²` error against a self-converged reference, and
/// fit the convergence order. Each `τ` must divide the horizon; rungs that
/// fail are excluded with a reason.
pub fn convergence_study(
    spec: &ExperimentSpec,
    grid: &Arc<Grid>,
    taus: &[f64],
    substep: &SubstepControl,
) -> Result<ConvergenceReport, HarnessError> {
    let u0 = spec.initial_data.realize(grid);
    let reference = reference_solve(&u0, spec.nu, spec.horizon, substep)?;
    let ref_hat = reference.field.to_spectral();
    let hat0 = u0.to_spectral();

    let mut rungs = Vec::new();
    let mut failures = Vec::new();
    for &tau in taus {
        if !(tau > 0.0 && tau.is_finite()) {
            failures.push(LadderFailure {
                tau,
                reason: "step size must be positive and finite".to_string(),
            });
            continue;
        }
        let n = (spec.horizon / tau).round();
        if n < 1.0 || (n * tau - spec.horizon).abs() > 1e-9 * spec.horizon.max(tau) {
            failures.push(LadderFailure {
                tau,
                reason: format!("{tau} does not divide the horizon {}", spec.horizon),
            });
            continue;
        }
        let cfg = SchemeConfig {
            nu: spec.nu,
            tau,
            scheme: spec.scheme,
            n_steps: n as usize,
            grid_points: grid.n_points(),
            substep: *substep,
        };
        if let Err(e) = cfg.validate() {
            failures.push(LadderFailure {
                tau,
                reason: e.to_string(),
            });
            continue;
        }
        match march(&hat0, &cfg) {
            Ok(state) => rungs.push((tau, (&state - &ref_hat).l2_norm())),
            Err(e) => failures.push(LadderFailure {
                tau,
                reason: e.to_string(),
            }),
        }
    }

    assemble_report(
        rungs,
        failures,
        spec.tolerance_band,
        Some(reference.certificate),
    )
}

/// Second-order expansion of one symmetric splitting step:
/// `S_L(τ)a + τ ∂_xx(a³) + (τ²/2) ∂_xx(L(a³) + 3a²(La + ∂_xx(a³)))` with
/// `L = -ν∂⁴ - ∂²`. Built term by term from the spectral primitives,
/// independently of the step composition it checks.
pub fn strang_consistency_expansion(a: &SpectralField, nu: f64, tau: f64) -> SpectralField {
    let lsym = |k: i64| -linear_symbol(LinearKind::Full, nu, k);
    let cube = cube_hat(a);
    let la = a.apply_real_multiplier(lsym);
    let dxx_cube = cube.derivative(2);
    let l_cube = cube.apply_real_multiplier(lsym);
    let inner = &la + &dxx_cube;
    let triple = product3_hat(a, a, &inner);
    let bracket = &l_cube + &(&triple * 3.0);
    let second = &bracket.derivative(2) * (0.5 * tau * tau);
    let first = &dxx_cube * tau;
    let propagated = linear_step_hat(a, tau, nu, LinearKind::Full);
    &(&propagated + &first) + &second
}

/// Compare one symmetric splitting step against its explicit second-order
/// expansion across a `τ` ladder; the remainder should fit third order.
pub fn consistency_study(
    a: &RealField,
    nu: f64,
    taus: &[f64],
    substep: &SubstepControl,
    band: (f64, f64),
) -> Result<ConvergenceReport, HarnessError> {
    let hat = a.to_spectral();
    let mut rungs = Vec::new();
    let mut failures = Vec::new();
    for &tau in taus {
        if !(tau > 0.0 && tau.is_finite()) {
            failures.push(LadderFailure {
                tau,
                reason: "step size must be positive and finite".to_string(),
            });
            continue;
        }
        let cfg = strang_config(a.grid().n_points(), nu, tau, 1, substep);
        match step_hat(&hat, &cfg) {
            Ok(step) => {
                let expansion = strang_consistency_expansion(&hat, nu, tau);
                rungs.push((tau, (&step - &expansion).l2_norm()));
            }
            Err(e) => failures.push(LadderFailure {
                tau,
                reason: e.to_string(),
            }),
        }
    }
    assemble_report(rungs, failures, band, None)
}

/// Measure the `H¹` distance between one symmetric splitting step and one
/// implicit-explicit step across a `τ` ladder; the distance should fit
/// (at least) second order.
pub fn imex_comparison(
    a: &RealField,
    nu: f64,
    taus: &[f64],
    substep: &SubstepControl,
    band: (f64, f64),
) -> Result<ConvergenceReport, HarnessError> {
    let hat = a.to_spectral();
    let h1_of = |f: &SpectralField| -> f64 {
        let l2 = f.l2_norm();
        let semi = f.hs_seminorm(1.0);
        (l2 * l2 + semi * semi).sqrt()
    };
    let mut rungs = Vec::new();
    let mut failures = Vec::new();
    for &tau in taus {
        if !(tau > 0.0 && tau.is_finite()) {
            failures.push(LadderFailure {
                tau,
                reason: "step size must be positive and finite".to_string(),
            });
            continue;
        }
        let cfg = strang_config(a.grid().n_points(), nu, tau, 1, substep);
        let strang = match step_hat(&hat, &cfg) {
            Ok(s) => s,
            Err(e) => {
                failures.push(LadderFailure {
                    tau,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let imex = match imex_step_hat(&hat, tau, nu) {
            Ok(s) => s,
            Err(e) => {
                failures.push(LadderFailure {
                    tau,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        rungs.push((tau, h1_of(&(&strang - &imex))));
    }
    assemble_report(rungs, failures, band, None)
}

/// Per-step row of a dissipation audit: the state's energy and residual
/// before the step, whether the step was flagged (residual at or above
/// [`RESIDUAL_FLAG_THRESHOLD`]), and whether the energy strictly decreased
/// across it.
#[derive(Clone, Copy, Debug)]
pub struct DissipationRow {
    pub step: usize,
    pub energy: f64,
    pub residual: f64,
    pub flagged: bool,
    pub strict_decrease: bool,
}

#[derive(Debug)]
pub struct DissipationReport {
    pub rows: Vec<DissipationRow>,
    pub final_energy: f64,
    /// First step index of the tail window, `ceil(1/τ)`.
    pub tail_start: usize,
    /// Running max of the energy from `tail_start` on; `None` when the run
    /// ended before the tail window.
    pub tail_max_energy: Option<f64>,
    pub flagged_steps: usize,
    /// True when every flagged step strictly decreased the energy
    /// (vacuously true with no flagged steps).
    pub all_flagged_strictly_decreased: bool,
    /// Present when the underlying run aborted early.
    pub failure: Option<String>,
}

/// Run the configured scheme, flag every step whose residual reaches the
/// threshold, and record whether the energy strictly decreased across each
/// flagged step, plus the running max of the energy past step `ceil(1/τ)`.
pub fn dissipation_experiment(u0: &RealField, cfg: &SchemeConfig) -> DissipationReport {
    let traj = run(u0, cfg, 0);
    let energies: Vec<f64> = traj.records.iter().map(|r| r.diagnostics.energy).collect();
    let residuals: Vec<f64> = traj
        .records
        .iter()
        .map(|r| r.diagnostics.residual)
        .collect();

    let mut rows = Vec::new();
    for n in 0..traj.records.len().saturating_sub(1) {
        let flagged = residuals[n] >= RESIDUAL_FLAG_THRESHOLD;
        rows.push(DissipationRow {
            step: n,
            energy: energies[n],
            residual: residuals[n],
            flagged,
            strict_decrease: energies[n + 1] < energies[n],
        });
    }

    let tail_start = (1.0 / cfg.tau).ceil() as usize;
    let tail_max_energy = traj
        .records
        .iter()
        .filter(|r| r.step_index >= tail_start)
        .map(|r| r.diagnostics.energy)
        .fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |m| m.max(e)))
        });

    let flagged_steps = rows.iter().filter(|r| r.flagged).count();
    let all_flagged_strictly_decreased = rows.iter().all(|r| !r.flagged || r.strict_decrease);

    DissipationReport {
        rows,
        final_energy: *energies.last().expect("at least the initial record"),
        tail_start,
        tail_max_energy,
        flagged_steps,
        all_flagged_strictly_decreased,
        failure: traj
            .failure
            .map(|f| format!("step {} failed: {}", f.step_index, f.error)),
    }
}
