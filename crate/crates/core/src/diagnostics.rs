//! Scalar functionals tracked along trajectories: Ginzburg-Landau energy,
//! Sobolev norms, the steady-state residual, and the kernel-scaling analyzer
//! for the linear semigroup.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::field::{dealiased_cube, RealField, SpectralField};
use crate::grid::Grid;
use crate::propagators::{linear_symbol, LinearKind};

/// Ginzburg-Landau energy `∫ (ν/2 |u_x|² + (u² - 1)²/4) dx`, with the
/// derivative computed spectrally and the integral by trapezoidal quadrature.
/// Nonnegative for every finite field.
pub fn energy(u: &RealField, nu: f64) -> f64 {
    assert!(nu > 0.0, "nu must be positive");
    let ux = u.to_spectral().derivative(1).to_real_unchecked();
    let h = u.grid().spacing();
    u.values()
        .iter()
        .zip(ux.values())
        .map(|(&v, &d)| 0.5 * nu * d * d + 0.25 * (v * v - 1.0).powi(2))
        .sum::<f64>()
        * h
}

/// Inhomogeneous Sobolev norm `sqrt(‖u‖₂² + (1/2π) Σ |k|^{2s} |û(k)|²)`.
/// Fractional orders are admitted since the definition is multiplier-based.
pub fn sobolev_norm(u: &RealField, s: f64) -> f64 {
    let hat = u.to_spectral();
    let l2 = hat.l2_norm();
    let semi = hat.hs_seminorm(s);
    (l2 * l2 + semi * semi).sqrt()
}

/// Steady-state residual `‖ν ∂_xx u - u³ + mean(u³) + u‖₂` with a dealiased
/// cube. Vanishes exactly at critical points of the energy under the
/// mean-zero constraint.
pub fn residual(u: &RealField, nu: f64) -> f64 {
    assert!(nu > 0.0, "nu must be positive");
    let uxx = u.to_spectral().derivative(2).to_real_unchecked();
    let cubed = dealiased_cube(u);
    let mean_cubed = cubed.mean();
    let h = u.grid().spacing();
    let sum: f64 = u
        .values()
        .iter()
        .zip(uxx.values())
        .zip(cubed.values())
        .map(|((&v, &d2), &c)| {
            let r = nu * d2 - c + mean_cubed + v;
            r * r
        })
        .sum();
    (h * sum).sqrt()
}

/// Per-step diagnostics bundle.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    /// Discrete mean of the field.
    pub mass: f64,
    pub l2: f64,
    pub l4: f64,
    pub h1: f64,
    /// Requested additional Sobolev norms as `(order, value)` pairs.
    pub hs: Vec<(f64, f64)>,
    pub energy: f64,
    pub residual: f64,
    pub linf: f64,
}

impl DiagnosticsRecord {
    pub fn measure(u: &RealField, nu: f64) -> Self {
        Self::measure_with_hs(u, nu, &[])
    }

    pub fn measure_with_hs(u: &RealField, nu: f64, orders: &[f64]) -> Self {
        DiagnosticsRecord {
            mass: u.mean(),
            l2: u.l2_norm(),
            l4: u.l4_norm(),
            h1: sobolev_norm(u, 1.0),
            hs: orders.iter().map(|&s| (s, sobolev_norm(u, s))).collect(),
            energy: energy(u, nu),
            residual: residual(u, nu),
            linf: u.linf_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.mass,
            self.l2,
            self.l4,
            self.h1,
            self.energy,
            self.residual,
            self.linf,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.hs.iter().all(|(_, v)| v.is_finite())
    }
}

/// Which semigroup kernel a norm scan measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelVariant {
    /// `K = F⁻¹(exp(-β(νk⁴ - k²)))`, the propagator kernel itself.
    Plain,
    /// `K₂ = F⁻¹(βk² exp(-β(νk⁴ - k²)))`, the kernel of `β ∂_xx` composed
    /// with the propagator.
    SecondDeriv,
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(
        "kernel unresolved at {n_points} points (relative tail {tail:.3e}); \
         try at least {suggested_n_points} points"
    )]
    Unresolved {
        n_points: usize,
        tail: f64,
        suggested_n_points: usize,
    },
    #[error("kernel scan requires beta > 0 and nu > 0 (beta = {beta}, nu = {nu})")]
    InvalidParameters { beta: f64, nu: f64 },
}

/// Base grid size for kernel scans; doubled automatically until the
/// multiplier tail is negligible.
const KERNEL_BASE_POINTS: usize = 8192;
const KERNEL_MAX_POINTS: usize = 1 << 21;
const KERNEL_TAIL_TOL: f64 = 1e-14;

fn kernel_multiplier(variant: KernelVariant, beta: f64, nu: f64, k: i64) -> f64 {
    let decay = (-beta * linear_symbol(LinearKind::Full, nu, k)).exp();
    match variant {
        KernelVariant::Plain => decay,
        KernelVariant::SecondDeriv => beta * (k * k) as f64 * decay,
    }
}

/// `L^p` norm of the semigroup kernel built from its Fourier multiplier on a
/// fine grid. The grid is refined until the multiplier at the band edge is
/// below `1e-14` of its maximum, so the quadrature resolves the kernel.
pub fn kernel_norms(
    beta: f64,
    nu: f64,
    p: f64,
    variant: KernelVariant,
) -> Result<f64, KernelError> {
    if !(beta > 0.0 && beta.is_finite() && nu > 0.0 && nu.is_finite()) {
        return Err(KernelError::InvalidParameters { beta, nu });
    }
    assert!(p >= 1.0, "p must lie in [1, inf], got {p}");

    let mut n = KERNEL_BASE_POINTS;
    loop {
        let peak = (0..=n / 2)
            .map(|k| kernel_multiplier(variant, beta, nu, k as i64).abs())
            .fold(0.0_f64, f64::max);
        let tail = kernel_multiplier(variant, beta, nu, (n / 2) as i64).abs();
        if tail <= KERNEL_TAIL_TOL * peak.max(f64::MIN_POSITIVE) {
            let grid = Grid::new(n);
            let kernel = build_kernel(&grid, variant, beta, nu);
            return Ok(kernel.lp_norm(p));
        }
        if n >= KERNEL_MAX_POINTS {
            return Err(KernelError::Unresolved {
                n_points: n,
                tail: tail / peak.max(f64::MIN_POSITIVE),
                suggested_n_points: n * 2,
            });
        }
        n *= 2;
    }
}

fn build_kernel(grid: &Arc<Grid>, variant: KernelVariant, beta: f64, nu: f64) -> RealField {
    SpectralField::from_multiplier(grid, |k| kernel_multiplier(variant, beta, nu, k))
        .to_real_unchecked()
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("scaling fit needs at least 3 samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("scaling fit needs beta values spanning at least 2 decades (span {span_decades:.2})")]
    DegenerateSpread { span_decades: f64 },
    #[error("scaling fit requires positive finite samples")]
    InvalidSamples,
}

/// Least-squares slope of `log(norm)` against `log(1/β)`: the growth
/// exponent `θ` in `norm ~ β^{-θ}` (negative when the norm decays as
/// `β → 0`).
pub fn fit_scaling_exponent(samples: &[(f64, f64)]) -> Result<f64, FitError> {
    if samples.len() < 3 {
        return Err(FitError::TooFewSamples { got: samples.len() });
    }
    if samples
        .iter()
        .any(|&(b, v)| !(b > 0.0 && b.is_finite() && v > 0.0 && v.is_finite()))
    {
        return Err(FitError::InvalidSamples);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(b, _) in samples {
        lo = lo.min(b);
        hi = hi.max(b);
    }
    let span_decades = (hi / lo).log10();
    if span_decades < 2.0 - 1e-9 {
        return Err(FitError::DegenerateSpread { span_decades });
    }

    let xs: Vec<f64> = samples.iter().map(|&(b, _)| (1.0 / b).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    Ok(sxy / sxx)
}

/// Scaling exponents predicted for the kernel norms: `‖K‖_p ~ β^{-(1/4 - 1/(4p))}`
/// grows, while `‖K₂‖₄ ~ β^{+5/16}` decays as `β → 0`.
pub fn expected_kernel_exponent(variant: KernelVariant, p: f64) -> Option<f64> {
    match variant {
        KernelVariant::Plain => Some(0.25 - 1.0 / (4.0 * p)),
        KernelVariant::SecondDeriv => {
            if (p - 4.0).abs() < 1e-12 {
                Some(5.0 / 16.0)
            } else {
                None
            }
        }
    }
}

/// Fitted scaling exponent for a kernel variant over a β ladder, reported as
/// a positive number matching [`expected_kernel_exponent`]: the growth
/// exponent for the plain kernel, the decay exponent for the second
/// derivative kernel (whose norm shrinks as `β → 0`).
pub fn kernel_scaling_exponent(
    betas: &[f64],
    nu: f64,
    p: f64,
    variant: KernelVariant,
) -> Result<f64, KernelScanError> {
    let mut samples = Vec::with_capacity(betas.len());
    for &beta in betas {
        samples.push((beta, kernel_norms(beta, nu, p, variant)?));
    }
    let slope = fit_scaling_exponent(&samples)?;
    Ok(match variant {
        KernelVariant::Plain => slope,
        KernelVariant::SecondDeriv => -slope,
    })
}

#[derive(Debug, Error)]
pub enum KernelScanError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Reference value: energy of the zero field, `2π/4`.
pub fn energy_of_zero() -> f64 {
    PI / 2.0
}
