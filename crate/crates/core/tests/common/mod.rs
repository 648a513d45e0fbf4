#![allow(dead_code)]

use nls_core::rng::GaussianStream;
use nls_core::spectral::{dyadic_project, DyadicMode};
use nls_core::{Complex, Field, Grid, View};

/// White-noise field with independent standard complex Gaussian samples.
pub fn noise(grid: &Grid<f64>, seed: u64) -> Field<f64> {
    let s = GaussianStream::new(seed);
    let values = (0..grid.len()).map(|i| s.complex(i as u64, 1.0)).collect();
    Field::from_values(grid, values, View::Physical).unwrap()
}

/// Noise restricted to `|ξ| ≲ 2N` by the smooth low-pass cutoff.
pub fn band_limited(grid: &Grid<f64>, seed: u64, block: u64) -> Field<f64> {
    dyadic_project(&noise(grid, seed), block, DyadicMode::Leq).unwrap().field.physical()
}

/// `e^{−|x−c|²/2a}` per axis product.
pub fn gaussian(grid: &Grid<f64>, centre: f64, a: f64) -> Field<f64> {
    let d = grid.dim();
    Field::from_fn(grid, |x| {
        let r2: f64 = x[..d].iter().map(|y| (y - centre).powi(2)).sum();
        Complex::new((-r2 / (2.0 * a)).exp(), 0.0)
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
