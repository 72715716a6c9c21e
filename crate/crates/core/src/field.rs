//! Scalar fields in physical and Fourier representation.
//!
//! The Fourier convention is the integral one: a coefficient is
//! `û(k) = ∫ u(x) e^{-ikx} dx` over `[-π, π]`, and the inverse carries the
//! `1/2π` factor. Single modes therefore transform as `cos(x) ↦ û(±1) = π`.
//! All multiplier operations are normalization-independent, but Sobolev and
//! Parseval sums below rely on this convention.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::Grid;

/// Relative tolerance for the conjugate-symmetry check in [`SpectralField::to_real`].
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectralError {
    /// The spectrum does not represent real data: the conjugate-symmetry
    /// defect exceeds the tolerance, relative to the largest coefficient.
    #[error(
        "spectrum is not conjugate-symmetric (relative defect {violation:.3e} > {tolerance:.1e})"
    )]
    MalformedSpectrum { violation: f64, tolerance: f64 },
}

/// Real-valued samples `u(x_j)` on the nodes of a [`Grid`].
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Fourier coefficients `û(k)` in FFT bin order on a [`Grid`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

/// `(-1)^k`, the phase relating DFT bins on `[0, 2π)` indexing to the
/// `[-π, π)` node layout.
#[inline]
fn parity(k: i64) -> f64 {
    if k & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            grid.n_points(),
            "value count must match the grid"
        );
        RealField { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_points();
        RealField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Sample a function at the grid nodes.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        RealField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Discrete mean `(1/n) Σ_j u(x_j)`; equals `û(0)/2π`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Subtract the discrete mean; the result has mean zero to machine
    /// precision.
    pub fn project_mean_zero(&self) -> RealField {
        let m = self.mean();
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// `L^p` norm by trapezoidal quadrature on the uniform grid
    /// (`p = ∞` gives the max over nodes).
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm requires p >= 1, got {p}");
        if p.is_infinite() {
            return self.linf_norm();
        }
        let h = self.grid.spacing();
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (h * sum).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        let sum: f64 = self.values.iter().map(|v| v * v).sum();
        (h * sum).sqrt()
    }

    pub fn l4_norm(&self) -> f64 {
        let h = self.grid.spacing();
        let sum: f64 = self.values.iter().map(|v| v * v * v * v).sum();
        (h * sum).powf(0.25)
    }

    /// Max of `|u|` over the collocation nodes.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Forward transform to integral-convention coefficients.
    pub fn to_spectral(&self) -> SpectralField {
        let n = self.grid.n_points();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.fft_forward().process(&mut buf);
        let scale = 2.0 * PI / n as f64;
        for (m, c) in buf.iter_mut().enumerate() {
            *c *= scale * parity(self.grid.wavenumber(m));
        }
        SpectralField {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }
}

impl SpectralField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_points();
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coeffs(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(
            coeffs.len(),
            grid.n_points(),
            "coefficient count must match the grid"
        );
        SpectralField { grid, coeffs }
    }

    /// Build from a real multiplier function of the wavenumber.
    pub fn from_multiplier(grid: &Arc<Grid>, m: impl Fn(i64) -> f64) -> Self {
        let coeffs = (0..grid.n_points())
            .map(|bin| Complex64::new(m(grid.wavenumber(bin)), 0.0))
            .collect();
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wavenumber `k`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[self.grid.bin(k)]
    }

    pub fn set_coeff(&mut self, k: i64, value: Complex64) {
        let bin = self.grid.bin(k);
        self.coeffs[bin] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Iterate `(wavenumber, coefficient)` pairs.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, &c)| (self.grid.wavenumber(m), c))
    }

    /// Multiply each coefficient by a real function of its wavenumber.
    pub fn apply_real_multiplier(&self, m: impl Fn(i64) -> f64) -> SpectralField {
        let coeffs = self.modes().map(|(k, c)| c * m(k)).collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Spectral derivative of the given order: coefficient `û(k)` becomes
    /// `(ik)^order û(k)`.
    pub fn derivative(&self, order: u32) -> SpectralField {
        assert!(order >= 1, "derivative order must be positive");
        let coeffs = self
            .modes()
            .map(|(k, c)| c * Complex64::new(0.0, k as f64).powu(order))
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `L²` norm via Parseval: `sqrt((1/2π) Σ_k |û(k)|²)`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum / (2.0 * PI)).sqrt()
    }

    /// Homogeneous Sobolev seminorm `sqrt((1/2π) Σ_k |k|^{2s} |û(k)|²)`.
    pub fn hs_seminorm(&self, s: f64) -> f64 {
        assert!(s >= 0.0, "Sobolev order must be nonnegative");
        let sum: f64 = self
            .modes()
            .map(|(k, c)| (k as f64).abs().powf(2.0 * s) * c.norm_sqr())
            .sum();
        (sum / (2.0 * PI)).sqrt()
    }

    /// Largest relative deviation from conjugate symmetry
    /// `û(-k) = conj(û(k))`; zero for spectra of real data.
    pub fn conjugate_symmetry_violation(&self) -> f64 {
        let n = self.grid.n_points();
        let scale = self.coeffs.iter().fold(0.0_f64, |acc, c| acc.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        // the zero and Nyquist bins are self-paired and must be real
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for m in 1..n / 2 {
            worst = worst.max((self.coeffs[m] - self.coeffs[n - m].conj()).norm());
        }
        worst / scale
    }

    /// Inverse transform. Fails when the spectrum is not conjugate-symmetric
    /// within [`SYMMETRY_TOL`]; otherwise the (roundoff-level) imaginary
    /// residue is discarded.
    pub fn to_real(&self) -> Result<RealField, SpectralError> {
        let violation = self.conjugate_symmetry_violation();
        if violation > SYMMETRY_TOL {
            return Err(SpectralError::MalformedSpectrum {
                violation,
                tolerance: SYMMETRY_TOL,
            });
        }
        Ok(self.to_real_unchecked())
    }

    /// Inverse transform that drops the imaginary part without checking
    /// symmetry. Internal propagator pipelines use this on spectra that are
    /// symmetric by construction.
    pub fn to_real_unchecked(&self) -> RealField {
        let mut buf: Vec<Complex64> = self.modes().map(|(k, c)| c * parity(k)).collect();
        self.grid.fft_inverse().process(&mut buf);
        let inv = 1.0 / (2.0 * PI);
        RealField {
            grid: self.grid.clone(),
            values: buf.iter().map(|c| c.re * inv).collect(),
        }
    }

    /// Embed into a finer grid by zero padding. A Nyquist coefficient is
    /// split evenly between `±n/2` so the embedded spectrum stays
    /// conjugate-symmetric.
    pub fn padded_to(&self, fine: &Arc<Grid>) -> SpectralField {
        let n = self.grid.n_points();
        assert!(fine.n_points() > n, "padding target must be strictly finer");
        let mut out = SpectralField::zeros(fine.clone());
        let half = (n / 2) as i64;
        for (k, c) in self.modes() {
            if k == half {
                out.set_coeff(half, 0.5 * c);
                out.set_coeff(-half, 0.5 * c);
            } else {
                out.set_coeff(k, c);
            }
        }
        out
    }

    /// Restrict to a coarser grid, keeping wavenumbers inside the target
    /// band. The pair `±n/2` aliases to the single coarse Nyquist bin and is
    /// folded there, so truncation inverts [`SpectralField::padded_to`].
    pub fn truncated_to(&self, coarse: &Arc<Grid>) -> SpectralField {
        let nc = coarse.n_points();
        assert!(
            nc < self.grid.n_points(),
            "truncation target must be strictly coarser"
        );
        let half = (nc / 2) as i64;
        let mut out = SpectralField::zeros(coarse.clone());
        for k in (-half + 1)..half {
            out.set_coeff(k, self.coeff(k));
        }
        out.set_coeff(half, self.coeff(half) + self.coeff(-half));
        out
    }
}

/// Pointwise cube with aliasing removed: the spectrum is zero-padded to a
/// grid of twice the size, cubed in physical space there, and truncated back.
/// For a trigonometric polynomial whose cube fits the padded band the result
/// carries the exact spectrum of `u³` on all retained modes.
pub fn dealiased_cube(u: &RealField) -> RealField {
    cube_hat(&u.to_spectral()).to_real_unchecked()
}

/// Alias-free pointwise product of three fields on the same grid, computed
/// on the doubled grid like [`dealiased_cube`].
pub fn dealiased_product3(f: &RealField, g: &RealField, h: &RealField) -> RealField {
    product3_hat(&f.to_spectral(), &g.to_spectral(), &h.to_spectral()).to_real_unchecked()
}

/// Spectrum of the dealiased cube of the field with spectrum `a`.
pub(crate) fn cube_hat(a: &SpectralField) -> SpectralField {
    cube_hat_with_sup(a).0
}

/// Like [`cube_hat`], also returning `max |u|` sampled on the fine grid
/// (used by the nonlinear subflow to bound its substep size).
pub(crate) fn cube_hat_with_sup(a: &SpectralField) -> (SpectralField, f64) {
    let fine = a.grid().padded();
    let w = a.padded_to(&fine).to_real_unchecked();
    let sup = w.linf_norm();
    let cubed: Vec<f64> = w.values().iter().map(|&v| v * v * v).collect();
    let hat = RealField::new(fine, cubed)
        .to_spectral()
        .truncated_to(a.grid());
    (hat, sup)
}

pub(crate) fn product3_hat(
    a: &SpectralField,
    b: &SpectralField,
    c: &SpectralField,
) -> SpectralField {
    let grid = a.grid();
    assert_eq!(grid.n_points(), b.grid().n_points());
    assert_eq!(grid.n_points(), c.grid().n_points());
    let fine = grid.padded();
    let fa = a.padded_to(&fine).to_real_unchecked();
    let fb = b.padded_to(&fine).to_real_unchecked();
    let fc = c.padded_to(&fine).to_real_unchecked();
    let prod: Vec<f64> = fa
        .values()
        .iter()
        .zip(fb.values())
        .zip(fc.values())
        .map(|((&x, &y), &z)| x * y * z)
        .collect();
    RealField::new(fine, prod).to_spectral().truncated_to(grid)
}

fn assert_same_grid(a: &Arc<Grid>, b: &Arc<Grid>) {
    assert_eq!(a.n_points(), b.n_points(), "fields live on different grids");
}

impl Add for &RealField {
    type Output = RealField;
    fn add(self, rhs: &RealField) -> RealField {
        assert_same_grid(&self.grid, &rhs.grid);
        RealField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &RealField {
    type Output = RealField;
    fn sub(self, rhs: &RealField) -> RealField {
        assert_same_grid(&self.grid, &rhs.grid);
        RealField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &RealField {
    type Output = RealField;
    fn mul(self, s: f64) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_same_grid(&self.grid, &rhs.grid);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_same_grid(&self.grid, &rhs.grid);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, s: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n)
    }

    /// Direct quadrature of `∫ f(x) e^{-ikx} dx` on a fine grid, independent
    /// of the FFT path.
    fn quad_mode(f: &dyn Fn(f64) -> f64, k: i64, samples: usize) -> Complex64 {
        let h = 2.0 * PI / samples as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..samples {
            let x = -PI + h * j as f64;
            acc += Complex64::from_polar(f(x), -(k as f64) * x);
        }
        acc * h
    }

    #[test]
    fn cosine_transforms_to_pi_at_pm_one() {
        let g = grid(64);
        let u = RealField::from_fn(&g, f64::cos);
        let hat = u.to_spectral();
        assert!((hat.coeff(1) - Complex64::new(PI, 0.0)).norm() < 1e-12);
        assert!((hat.coeff(-1) - Complex64::new(PI, 0.0)).norm() < 1e-12);
        for (k, c) in hat.modes() {
            if k.abs() != 1 {
                assert!(c.norm() < 1e-12, "stray energy at k={k}");
            }
        }
        // agrees with direct quadrature
        let q = quad_mode(&f64::cos, 1, 4096);
        assert!((hat.coeff(1) - q).norm() < 1e-10);
    }

    #[test]
    fn zero_and_constant_transforms() {
        let g = grid(32);
        let zero = RealField::zeros(g.clone()).to_spectral();
        assert!(zero.coeffs().iter().all(|c| c.norm() == 0.0));

        let one = RealField::from_fn(&g, |_| 1.0).to_spectral();
        assert!((one.coeff(0) - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-12);
        for (k, c) in one.modes() {
            if k != 0 {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let g = grid(64);
        let u = RealField::from_fn(&g, |x| (2.0 * x).sin() + 0.3 * (5.0 * x).cos() - 0.7);
        let back = u.to_spectral().to_real().unwrap();
        let scale = u.linf_norm();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn inverse_of_single_modes() {
        let g = grid(32);
        let mut hat = SpectralField::zeros(g.clone());
        hat.set_coeff(1, Complex64::new(PI, 0.0));
        hat.set_coeff(-1, Complex64::new(PI, 0.0));
        let u = hat.to_real().unwrap();
        for (j, v) in u.values().iter().enumerate() {
            assert!((v - g.node(j).cos()).abs() < 1e-12);
        }

        let mut flat = SpectralField::zeros(g.clone());
        flat.set_coeff(0, Complex64::new(2.0 * PI, 0.0));
        let c = flat.to_real().unwrap();
        assert!(c.values().iter().all(|v| (v - 1.0).abs() < 1e-13));

        let z = SpectralField::zeros(g).to_real().unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let g = grid(16);
        let mut hat = SpectralField::zeros(g);
        hat.set_coeff(2, Complex64::new(1.0, 0.5));
        // missing the conjugate partner at k = -2
        let err = hat.to_real().unwrap_err();
        match err {
            SpectralError::MalformedSpectrum { violation, .. } => assert!(violation > 0.5),
        }
    }

    #[test]
    fn derivative_single_modes() {
        let g = grid(32);
        let u = RealField::from_fn(&g, f64::cos).to_spectral();
        let d2 = u.derivative(2).to_real().unwrap();
        for (j, v) in d2.values().iter().enumerate() {
            assert!((v + g.node(j).cos()).abs() < 1e-12);
        }

        // fourth-derivative roundoff is amplified by k_max^4, so compare at 1e-10
        let u2 = RealField::from_fn(&g, |x| (2.0 * x).cos()).to_spectral();
        let d4 = u2.derivative(4).to_real().unwrap();
        for (j, v) in d4.values().iter().enumerate() {
            let want = 16.0 * (2.0 * g.node(j)).cos();
            assert!((v - want).abs() < 1e-10, "j={j}: got {v}, want {want}");
        }

        let flat = RealField::from_fn(&g, |_| 3.0).to_spectral();
        for order in 1..=4 {
            assert!(flat.derivative(order).to_real().unwrap().linf_norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_is_linear() {
        let g = grid(64);
        let f = RealField::from_fn(&g, |x| (3.0 * x).sin()).to_spectral();
        let h = RealField::from_fn(&g, |x| (x).cos() - 0.2 * (6.0 * x).sin()).to_spectral();
        let lhs = (&(&f * 2.5) + &(&h * -1.25)).derivative(2);
        let rhs = &(&f.derivative(2) * 2.5) + &(&h.derivative(2) * -1.25);
        let diff = (&lhs - &rhs).to_real_unchecked().linf_norm();
        assert!(diff < 1e-12);
    }

    #[test]
    fn dealiased_cube_of_cosine() {
        for n in [8usize, 16, 64, 256] {
            let g = grid(n);
            let u = RealField::from_fn(&g, f64::cos);
            let cube = dealiased_cube(&u);
            for (j, v) in cube.values().iter().enumerate() {
                let x = g.node(j);
                let exact = (3.0 * x.cos() + (3.0 * x).cos()) / 4.0;
                assert!((v - exact).abs() < 1e-12, "n={n}, node {j}");
            }
        }
    }

    #[test]
    fn dealiased_cube_matches_quadrature_spectrum() {
        // degree-5 data on n=32: the cube (degree 15) fits neither the bare
        // band nor on-grid products, but the padded product is exact on the
        // retained modes
        let g = grid(32);
        let f = |x: f64| 0.8 * x.cos() + 0.5 * (4.0 * x).sin() - 0.3 * (5.0 * x).cos();
        let u = RealField::from_fn(&g, f);
        let hat = dealiased_cube(&u).to_spectral();
        for k in -15..=15 {
            let exact = quad_mode(&|x| f(x).powi(3), k, 8192);
            let got = if k.abs() <= 16 {
                hat.coeff(k)
            } else {
                Complex64::new(0.0, 0.0)
            };
            if k.abs() < 16 {
                assert!(
                    (got - exact).norm() < 1e-10,
                    "mode {k}: got {got}, exact {exact}"
                );
            }
        }
    }

    #[test]
    fn dealiased_cube_trivia() {
        let g = grid(16);
        let zero = dealiased_cube(&RealField::zeros(g.clone()));
        assert!(zero.linf_norm() == 0.0);

        let c = dealiased_cube(&RealField::from_fn(&g, |_| -1.7));
        for v in c.values() {
            assert!((v - (-1.7f64).powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn pad_then_truncate_is_identity() {
        let g = grid(16);
        let u = RealField::from_fn(&g, |x| x.sin() + 0.25 * (8.0 * x).cos());
        let hat = u.to_spectral();
        let back = hat.padded_to(&g.padded()).truncated_to(&g);
        for (k, c) in hat.modes() {
            assert!((back.coeff(k) - c).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn mean_zero_projection() {
        let g = grid(32);
        let u = RealField::from_fn(&g, |x| 1.0 + x.cos());
        let p = u.project_mean_zero();
        assert!(p.mean().abs() < 1e-15);
        for (j, v) in p.values().iter().enumerate() {
            assert!((v - g.node(j).cos()).abs() < 1e-12);
        }

        let already = RealField::from_fn(&g, |x| (2.0 * x).sin());
        let q = already.project_mean_zero();
        for (a, b) in already.values().iter().zip(q.values()) {
            assert!((a - b).abs() < 1e-14);
        }

        let flat = RealField::from_fn(&g, |_| 5.0).project_mean_zero();
        assert!(flat.linf_norm() < 1e-14);
    }

    #[test]
    fn parseval_identity() {
        let g = grid(64);
        let u = RealField::from_fn(&g, |x| x.cos() + 0.4 * (7.0 * x).sin() - 0.1);
        let quad = u.l2_norm();
        let spec = u.to_spectral().l2_norm();
        assert!((quad - spec).abs() <= 1e-10 * quad.max(1.0));
    }
}
