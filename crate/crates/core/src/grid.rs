//! Uniform periodic collocation grid on the 2π torus.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};

/// Uniform grid on `[-π, π)` with an even number of collocation nodes.
///
/// Node `j` sits at `x_j = -π + 2πj/n`. Spectral coefficients are stored in
/// FFT bin order and indexed by the signed wavenumbers `{-n/2+1, ..., n/2}`;
/// the Nyquist mode is assigned the positive wavenumber `n/2`.
///
/// The grid owns its FFT plans, so cloning the `Arc<Grid>` shared by all
/// fields on the same discretization is cheap and thread-safe.
pub struct Grid {
    n: usize,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
    padded: OnceLock<Arc<Grid>>,
}

impl Grid {
    /// Build a grid with `n_points` nodes (even, at least 8).
    pub fn new(n_points: usize) -> Arc<Self> {
        assert!(
            n_points >= 8 && n_points.is_multiple_of(2),
            "grid size must be even and at least 8, got {n_points}"
        );
        let mut planner = FftPlanner::new();
        Arc::new(Grid {
            n: n_points,
            fft_forward: planner.plan_fft_forward(n_points),
            fft_inverse: planner.plan_fft_inverse(n_points),
            padded: OnceLock::new(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Domain length, always 2π.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    /// Node spacing 2π/n.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Coordinate of node `j`.
    pub fn node(&self, j: usize) -> f64 {
        debug_assert!(j < self.n);
        -PI + 2.0 * PI * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }

    /// Signed wavenumber carried by FFT bin `m`: `m` for `m <= n/2`,
    /// `m - n` above.
    pub fn wavenumber(&self, bin: usize) -> i64 {
        debug_assert!(bin < self.n);
        let half = (self.n / 2) as i64;
        let m = bin as i64;
        if m <= half {
            m
        } else {
            m - self.n as i64
        }
    }

    /// FFT bin holding wavenumber `k` (taken modulo `n`).
    pub fn bin(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Largest resolved wavenumber, `n/2`.
    pub fn max_wavenumber(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Grid with twice the resolution, used for alias-free cubic products.
    /// Built lazily and cached.
    pub fn padded(self: &Arc<Self>) -> Arc<Grid> {
        self.padded.get_or_init(|| Grid::new(self.n * 2)).clone()
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.fft_forward
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.fft_inverse
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n_points", &self.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for Grid {}
