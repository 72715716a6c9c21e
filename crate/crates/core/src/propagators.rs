//! The sub-propagators composed by the splitting schemes: exact linear
//! Fourier-multiplier steps, the nonlinear diffusion subflows, the one-step
//! explicit nonlinear update, and the implicit-explicit comparator step.

use thiserror::Error;

use crate::field::{cube_hat_with_sup, RealField, SpectralField};

/// Which linear semigroup a multiplier step applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearKind {
    /// `exp(-τ(ν∂⁴ + ∂²))`, per-mode factor `exp(-τ(νk⁴ - k²))`. The symbol
    /// is negative for `νk² < 1`, so low modes may be amplified.
    Full,
    /// `exp(-ντ∂⁴)`, per-mode factor `exp(-τνk⁴)`; a contraction on every
    /// mode.
    BiharmonicOnly,
}

/// Right side integrated by the nonlinear subflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubflowKind {
    /// `∂_t w = ∂_xx(w³)`; contractive in the discrete `L²` and `L⁴` norms.
    CubicOnly,
    /// `∂_t w = ∂_xx(w³ - w)`; the `-w` part is anti-diffusive, so no
    /// monotonicity holds.
    CubicMinusLinear,
}

/// Integrator selection for the nonlinear subflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerOrder {
    Rk4,
}

/// Stability controls for the explicit substepping inside the nonlinear
/// subflow.
#[derive(Clone, Copy, Debug)]
pub struct SubstepControl {
    /// Fraction of the stability-bounded substep actually taken, in `(0, 1]`.
    pub safety: f64,
    /// Hard cap on substeps per invocation.
    pub max_substeps: usize,
    pub inner_order: InnerOrder,
}

impl Default for SubstepControl {
    fn default() -> Self {
        SubstepControl {
            safety: 0.5,
            max_substeps: 1_000_000,
            inner_order: InnerOrder::Rk4,
        }
    }
}

impl SubstepControl {
    pub fn validate(&self) -> Result<(), PropagatorError> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(PropagatorError::InvalidControl {
                message: format!("safety must lie in (0, 1], got {}", self.safety),
            });
        }
        if self.max_substeps == 0 {
            return Err(PropagatorError::InvalidControl {
                message: "max_substeps must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error(
        "nonlinear subflow ran out of substeps: {max_substeps} taken, \
         {remaining:.3e} of {tau:.3e} left (next delta {attempted_delta:.3e})"
    )]
    SubstepBudgetExhausted {
        attempted_delta: f64,
        max_substeps: usize,
        remaining: f64,
        tau: f64,
    },
    #[error("nonlinear subflow produced non-finite values at substep {substep}")]
    Divergence { substep: usize },
    #[error("non-finite state detected at outer step {step}")]
    NonFiniteState { step: usize },
    #[error("implicit-explicit step requires tau < 4*nu (tau = {tau}, nu = {nu})")]
    ImexStepTooLarge { tau: f64, nu: f64 },
    #[error("invalid substep control: {message}")]
    InvalidControl { message: String },
}

/// Per-substep trace entry from the nonlinear subflow.
#[derive(Clone, Copy, Debug)]
pub struct SubstepRecord {
    /// Time within the subflow after this entry's substep (0 for the initial
    /// entry).
    pub t: f64,
    /// Substep size taken (0 for the initial entry).
    pub delta: f64,
    pub l2: f64,
    pub l4: f64,
}

/// Symbol of the dissipative linear operator: the multiplier step scales
/// mode `k` by `exp(-τ · symbol)`.
#[inline]
pub fn linear_symbol(kind: LinearKind, nu: f64, k: i64) -> f64 {
    let k2 = (k * k) as f64;
    match kind {
        LinearKind::Full => nu * k2 * k2 - k2,
        LinearKind::BiharmonicOnly => nu * k2 * k2,
    }
}

pub(crate) fn linear_step_hat(
    a: &SpectralField,
    tau: f64,
    nu: f64,
    kind: LinearKind,
) -> SpectralField {
    assert!(tau >= 0.0 && tau.is_finite(), "tau must be finite and >= 0");
    assert!(nu > 0.0, "nu must be positive");
    a.apply_real_multiplier(|k| (-tau * linear_symbol(kind, nu, k)).exp())
}

/// Exact linear propagator: scales mode `k` by `exp(-τ(νk⁴ - k²))` (full) or
/// `exp(-τνk⁴)` (biharmonic only). The multiplier at `k = 0` is one, so the
/// mean is preserved bit-for-bit.
pub fn linear_step(a: &RealField, tau: f64, nu: f64, kind: LinearKind) -> RealField {
    linear_step_hat(&a.to_spectral(), tau, nu, kind).to_real_unchecked()
}

/// Right side of the subflow in spectral form, together with `max |w|`
/// sampled on the dealiasing grid.
fn subflow_rhs(kind: SubflowKind, w: &SpectralField) -> (SpectralField, f64) {
    let (cubed, sup) = cube_hat_with_sup(w);
    let rhs = match kind {
        // ∂_xx(w³): multiply the cube spectrum by -k²
        SubflowKind::CubicOnly => cubed.apply_real_multiplier(|k| -((k * k) as f64)),
        // ∂_xx(w³ - w) = ∂_xx(w³) + k² w in spectral form
        SubflowKind::CubicMinusLinear => {
            let grid = w.grid().clone();
            let coeffs = cubed
                .modes()
                .zip(w.coeffs())
                .map(|((k, c3), &cw)| {
                    let k2 = (k * k) as f64;
                    -k2 * c3 + k2 * cw
                })
                .collect();
            SpectralField::from_coeffs(grid, coeffs)
        }
    };
    (rhs, sup)
}

/// Stability-bounded substep for explicit integration of the subflow,
/// treating `3w²` (plus one for the anti-diffusive variant) as a frozen
/// diffusivity: `δ = safety · Δx² / (D · π²/4 + 1)`.
fn stability_delta(kind: SubflowKind, sup: f64, dx: f64, safety: f64) -> f64 {
    let diffusivity = match kind {
        SubflowKind::CubicOnly => 3.0 * sup * sup,
        SubflowKind::CubicMinusLinear => 3.0 * sup * sup + 1.0,
    };
    safety * dx * dx / (diffusivity * std::f64::consts::PI.powi(2) / 4.0 + 1.0)
}

pub(crate) fn nonlinear_subflow_hat(
    a: &SpectralField,
    tau: f64,
    kind: SubflowKind,
    ctl: &SubstepControl,
    mut trace: Option<&mut Vec<SubstepRecord>>,
) -> Result<SpectralField, PropagatorError> {
    assert!(tau > 0.0 && tau.is_finite(), "tau must be finite and > 0");
    ctl.validate()?;
    let InnerOrder::Rk4 = ctl.inner_order;

    let dx = a.grid().spacing();
    let mut w = a.clone();
    let mut t = 0.0_f64;
    let mut used = 0_usize;

    if let Some(rows) = trace.as_deref_mut() {
        let wr = w.to_real_unchecked();
        rows.push(SubstepRecord {
            t: 0.0,
            delta: 0.0,
            l2: wr.l2_norm(),
            l4: wr.l4_norm(),
        });
    }

    loop {
        let remaining = tau - t;
        if remaining <= tau * 1e-15 {
            break;
        }

        let (k1, sup) = subflow_rhs(kind, &w);
        if !sup.is_finite() {
            return Err(PropagatorError::Divergence { substep: used });
        }
        let stab = stability_delta(kind, sup, dx, ctl.safety);
        let last = stab >= remaining;
        let delta = if last { remaining } else { stab };
        if used == ctl.max_substeps {
            return Err(PropagatorError::SubstepBudgetExhausted {
                attempted_delta: delta,
                max_substeps: ctl.max_substeps,
                remaining,
                tau,
            });
        }

        let k2 = subflow_rhs(kind, &(&w + &(&k1 * (0.5 * delta)))).0;
        let k3 = subflow_rhs(kind, &(&w + &(&k2 * (0.5 * delta)))).0;
        let k4 = subflow_rhs(kind, &(&w + &(&k3 * delta))).0;
        let incr = &(&(&k1 + &(&k2 * 2.0)) + &(&(&k3 * 2.0) + &k4)) * (delta / 6.0);
        w = &w + &incr;

        used += 1;
        t = if last { tau } else { t + delta };

        if let Some(rows) = trace.as_deref_mut() {
            let wr = w.to_real_unchecked();
            rows.push(SubstepRecord {
                t,
                delta,
                l2: wr.l2_norm(),
                l4: wr.l4_norm(),
            });
        }
        if last {
            break;
        }
    }

    if !w.is_finite() {
        return Err(PropagatorError::Divergence { substep: used });
    }
    Ok(w)
}

/// Approximate the time-`τ` flow of `∂_t w = ∂_xx(w³)` (or `∂_xx(w³ - w)`)
/// by explicit RK4 substeps in spectral space with dealiased cubes. The
/// substep size is recomputed from the current `max |w|` each time; the mean
/// is conserved exactly because the right side is a second derivative.
pub fn nonlinear_subflow(
    a: &RealField,
    tau: f64,
    kind: SubflowKind,
    ctl: &SubstepControl,
) -> Result<RealField, PropagatorError> {
    Ok(nonlinear_subflow_hat(&a.to_spectral(), tau, kind, ctl, None)?.to_real_unchecked())
}

/// [`nonlinear_subflow`] that also reports the norm history along every
/// substep (first entry is the initial state).
pub fn nonlinear_subflow_traced(
    a: &RealField,
    tau: f64,
    kind: SubflowKind,
    ctl: &SubstepControl,
) -> Result<(RealField, Vec<SubstepRecord>), PropagatorError> {
    let mut rows = Vec::new();
    let w = nonlinear_subflow_hat(&a.to_spectral(), tau, kind, ctl, Some(&mut rows))?;
    Ok((w.to_real_unchecked(), rows))
}

pub(crate) fn one_step_nonlinear_hat(a: &SpectralField, tau: f64) -> SpectralField {
    assert!(tau >= 0.0 && tau.is_finite(), "tau must be finite and >= 0");
    let cubed = crate::field::cube_hat(a);
    let grid = a.grid().clone();
    let coeffs = cubed
        .modes()
        .zip(a.coeffs())
        .map(|((k, c3), &ca)| {
            let k2 = (k * k) as f64;
            ca - tau * k2 * (c3 - ca)
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}

/// Single explicit update `a + τ ∂_xx(a³ - a)` with a dealiased cube; the
/// nonlinear half of the first-order scheme.
pub fn one_step_nonlinear(a: &RealField, tau: f64) -> RealField {
    one_step_nonlinear_hat(&a.to_spectral(), tau).to_real_unchecked()
}

pub(crate) fn imex_step_hat(
    a: &SpectralField,
    tau: f64,
    nu: f64,
) -> Result<SpectralField, PropagatorError> {
    assert!(tau > 0.0 && tau.is_finite(), "tau must be finite and > 0");
    assert!(nu > 0.0, "nu must be positive");
    if tau >= 4.0 * nu {
        return Err(PropagatorError::ImexStepTooLarge { tau, nu });
    }
    let cubed = crate::field::cube_hat(a);
    let grid = a.grid().clone();
    let coeffs = cubed
        .modes()
        .zip(a.coeffs())
        .map(|((k, c3), &ca)| {
            let k2 = (k * k) as f64;
            let k4 = k2 * k2;
            (ca - tau * k2 * c3) / (1.0 + tau * (nu * k4 - k2))
        })
        .collect();
    Ok(SpectralField::from_coeffs(grid, coeffs))
}

/// Implicit-explicit step: the stiff linear part is treated implicitly, the
/// cubic term explicitly, in one diagonal spectral solve
/// `ŵ(k) = (â(k) - τk²(a³)^(k)) / (1 + τ(νk⁴ - k²))`.
/// Requires `τ < 4ν` so the denominator stays positive for every `k`.
pub fn imex_step(a: &RealField, tau: f64, nu: f64) -> Result<RealField, PropagatorError> {
    Ok(imex_step_hat(&a.to_spectral(), tau, nu)?.to_real_unchecked())
}
