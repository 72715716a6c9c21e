//! Composition of the sub-propagators into time-marching schemes, plus the
//! outer time loop with per-step diagnostics.

use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;
use crate::field::{RealField, SpectralField};
use crate::propagators::{
    imex_step_hat, linear_step_hat, nonlinear_subflow_hat, one_step_nonlinear_hat, LinearKind,
    PropagatorError, SubflowKind, SubstepControl,
};

/// Time-marching scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    /// Symmetric linear-nonlinear-linear composition
    /// `S_L(τ/2) S_N(τ) S_L(τ/2)`; second order.
    StrangLnl,
    /// Half-shifted iterate `S_N(τ) S_L(τ/2)` used in stability analysis.
    StrangShifted,
    /// First-order composition of the explicit nonlinear update with the
    /// biharmonic semigroup.
    LieFirstOrder,
    /// Single implicit-explicit solve per step.
    Imex,
}

/// Full configuration of a time-marching run.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub nu: f64,
    pub tau: f64,
    pub scheme: SchemeKind,
    /// Number of outer steps; `n_steps * tau` is the simulated horizon.
    pub n_steps: usize,
    pub grid_points: usize,
    pub substep: SubstepControl,
}

#[derive(Debug, Error)]
pub enum SchemeConfigError {
    #[error("scheme.{field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SchemeConfigError> {
        let err = |field: &'static str, message: String| {
            Err(SchemeConfigError::Invalid { field, message })
        };
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return err(
                "nu",
                format!("must be positive and finite, got {}", self.nu),
            );
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return err(
                "tau",
                format!("must be positive and finite, got {}", self.tau),
            );
        }
        if self.grid_points < 8 || !self.grid_points.is_multiple_of(2) {
            return err(
                "grid_points",
                format!("must be even and at least 8, got {}", self.grid_points),
            );
        }
        if self.scheme == SchemeKind::Imex && self.tau >= 4.0 * self.nu {
            return err(
                "tau",
                format!(
                    "implicit-explicit scheme requires tau < 4*nu (tau = {}, nu = {})",
                    self.tau, self.nu
                ),
            );
        }
        if let Err(e) = self.substep.validate() {
            return err("substep", e.to_string());
        }
        Ok(())
    }

    /// Simulated horizon `n_steps * tau`.
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.tau
    }
}

/// One outer step of the configured scheme on spectral state. Consecutive
/// half-steps are deliberately not fused across step boundaries, so each
/// output is exactly the per-step iterate of the scheme definition.
pub fn step_hat(
    state: &SpectralField,
    cfg: &SchemeConfig,
) -> Result<SpectralField, PropagatorError> {
    let tau = cfg.tau;
    let nu = cfg.nu;
    match cfg.scheme {
        SchemeKind::StrangLnl => {
            let half = linear_step_hat(state, 0.5 * tau, nu, LinearKind::Full);
            let mid =
                nonlinear_subflow_hat(&half, tau, SubflowKind::CubicOnly, &cfg.substep, None)?;
            Ok(linear_step_hat(&mid, 0.5 * tau, nu, LinearKind::Full))
        }
        SchemeKind::StrangShifted => {
            let half = linear_step_hat(state, 0.5 * tau, nu, LinearKind::Full);
            nonlinear_subflow_hat(&half, tau, SubflowKind::CubicOnly, &cfg.substep, None)
        }
        SchemeKind::LieFirstOrder => {
            let nl = one_step_nonlinear_hat(state, tau);
            Ok(linear_step_hat(&nl, tau, nu, LinearKind::BiharmonicOnly))
        }
        SchemeKind::Imex => imex_step_hat(state, tau, nu),
    }
}

/// One symmetric splitting step `S_L(τ/2) S_N(τ) S_L(τ/2)`; preserves the
/// mean exactly.
pub fn strang_step(u: &RealField, cfg: &SchemeConfig) -> Result<RealField, PropagatorError> {
    let cfg = SchemeConfig {
        scheme: SchemeKind::StrangLnl,
        ..cfg.clone()
    };
    Ok(step_hat(&u.to_spectral(), &cfg)?.to_real_unchecked())
}

/// The half-shifted iterate `S_N(τ) S_L(τ/2)`; composing a trailing
/// half-step recovers [`strang_step`].
pub fn shifted_step(v: &RealField, cfg: &SchemeConfig) -> Result<RealField, PropagatorError> {
    let cfg = SchemeConfig {
        scheme: SchemeKind::StrangShifted,
        ..cfg.clone()
    };
    Ok(step_hat(&v.to_spectral(), &cfg)?.to_real_unchecked())
}

/// First-order step: explicit nonlinear update followed by the biharmonic
/// semigroup.
pub fn lie_step(u: &RealField, cfg: &SchemeConfig) -> RealField {
    let cfg = SchemeConfig {
        scheme: SchemeKind::LieFirstOrder,
        ..cfg.clone()
    };
    step_hat(&u.to_spectral(), &cfg)
        .expect("first-order step cannot fail")
        .to_real_unchecked()
}

/// Trajectory entry: step counter, time, optional field snapshot, and the
/// diagnostics bundle.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub step_index: usize,
    /// Always exactly `step_index * tau`.
    pub time: f64,
    pub field_snapshot: Option<RealField>,
    pub diagnostics: DiagnosticsRecord,
}

/// Failure marker for a run that aborted mid-trajectory.
#[derive(Debug)]
pub struct RunFailure {
    /// Outer step that failed (the trajectory holds records up to
    /// `step_index - 1`).
    pub step_index: usize,
    pub error: PropagatorError,
}

/// Result of a time-marching run: one record per completed step (including
/// the initial state) and an error marker when the run aborted early.
#[derive(Debug)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub failure: Option<RunFailure>,
}

impl Trajectory {
    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records
            .last()
            .expect("trajectory always has the initial record")
    }
}

/// Advance `n_steps` outer steps from `u0`, recording diagnostics each step
/// and a field snapshot every `snapshot_every` steps (0 disables snapshots).
/// On a propagated error the partial trajectory is returned together with
/// the failure marker. Identical inputs produce bit-identical trajectories.
pub fn run(u0: &RealField, cfg: &SchemeConfig, snapshot_every: usize) -> Trajectory {
    assert_eq!(
        u0.grid().n_points(),
        cfg.grid_points,
        "initial data grid does not match the configuration"
    );

    let mut records = Vec::with_capacity(cfg.n_steps + 1);
    let mut failure = None;

    let snap = |step: usize| snapshot_every > 0 && step.is_multiple_of(snapshot_every);
    records.push(TrajectoryRecord {
        step_index: 0,
        time: 0.0,
        field_snapshot: snap(0).then(|| u0.clone()),
        diagnostics: DiagnosticsRecord::measure(u0, cfg.nu),
    });

    let mut state = u0.to_spectral();
    for n in 1..=cfg.n_steps {
        match step_hat(&state, cfg) {
            Ok(next) => {
                state = next;
                let u = state.to_real_unchecked();
                let diagnostics = DiagnosticsRecord::measure(&u, cfg.nu);
                let finite = diagnostics.is_finite();
                records.push(TrajectoryRecord {
                    step_index: n,
                    time: n as f64 * cfg.tau,
                    field_snapshot: snap(n).then(|| u.clone()),
                    diagnostics,
                });
                if !finite {
                    failure = Some(RunFailure {
                        step_index: n,
                        error: PropagatorError::NonFiniteState { step: n },
                    });
                    break;
                }
            }
            Err(error) => {
                failure = Some(RunFailure {
                    step_index: n,
                    error,
                });
                break;
            }
        }
    }

    Trajectory { records, failure }
}
