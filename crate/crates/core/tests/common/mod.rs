//! Shared oracles for the integration suites, computed by direct summation
//! with no dependence on the library's FFT pipeline.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use chsplit_core::{Grid, RealField};
use num_complex::Complex64;

/// Direct quadrature of `∫ f(x) e^{-ikx} dx` over `[-π, π]` on `samples`
/// uniform points.
pub fn quad_mode(f: &dyn Fn(f64) -> f64, k: i64, samples: usize) -> Complex64 {
    let h = 2.0 * PI / samples as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..samples {
        let x = -PI + h * j as f64;
        acc += Complex64::from_polar(f(x), -(k as f64) * x);
    }
    acc * h
}

/// Direct quadrature of `∫ f(x) dx` over `[-π, π]`.
pub fn quad_integral(f: &dyn Fn(f64) -> f64, samples: usize) -> f64 {
    let h = 2.0 * PI / samples as f64;
    (0..samples).map(|j| f(-PI + h * j as f64)).sum::<f64>() * h
}

/// Largest deviation between a field's nodal values and a function sampled
/// at the same nodes.
pub fn max_node_diff(u: &RealField, f: &dyn Fn(f64) -> f64) -> f64 {
    u.grid()
        .nodes()
        .zip(u.values())
        .map(|(x, &v)| (v - f(x)).abs())
        .fold(0.0, f64::max)
}

/// Implicit-explicit update computed mode by mode from quadrature
/// coefficients and reconstructed by direct summation: for each wavenumber,
/// `ŵ(k) = (f̂(k) - τk²(f³)^(k)) / (1 + τ(νk⁴ - k²))`. Valid when `f` is a
/// trigonometric polynomial resolved by the grid.
pub fn dense_imex_oracle(f: &dyn Fn(f64) -> f64, nu: f64, tau: f64, grid: &Arc<Grid>) -> Vec<f64> {
    let samples = 4096;
    let n = grid.n_points() as i64;
    let half = n / 2;
    let cubed = |x: f64| f(x).powi(3);

    let mut modes: Vec<(i64, Complex64)> = Vec::new();
    for k in (-half + 1)..=half {
        let a = quad_mode(f, k, samples);
        let c = quad_mode(&cubed, k, samples);
        let k2 = (k * k) as f64;
        let k4 = k2 * k2;
        modes.push((k, (a - tau * k2 * c) / (1.0 + tau * (nu * k4 - k2))));
    }

    grid.nodes()
        .map(|x| {
            let sum: Complex64 = modes
                .iter()
                .map(|&(k, w)| w * Complex64::from_polar(1.0, k as f64 * x))
                .sum();
            (sum / (2.0 * PI)).re
        })
        .collect()
}
