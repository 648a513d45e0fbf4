use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::cutoff::{lp_block, lp_cutoff};
use super::{Field, Grid};
use crate::{Error, Real, Result};

/// Output of a projector that may fall outside the resolved lattice.
#[derive(Clone, Debug)]
pub struct Projected<T: Real> {
    pub field: Field<T>,
    /// Set when the requested window is not (fully) resolved by the grid.
    pub clipped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DyadicMode {
    /// `P_N` (the `N = 1` block is `P_{≤1}`).
    Exact,
    /// `P_{≤N}`.
    Leq,
    /// `P_{≥N} = I − P_{≤N}`.
    Geq,
}

/// Derivative weight attached to a Fourier multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "order")]
pub enum Derivative {
    /// `|∇|^s`, multiplier `|ξ|^s`.
    Homogeneous(f64),
    /// `⟨∇⟩^s`, multiplier `(1 + |ξ|²)^{s/2}`.
    Inhomogeneous(f64),
}

impl Derivative {
    pub fn none() -> Self {
        Derivative::Inhomogeneous(0.0)
    }

    /// Multiplier value at `|ξ|²`.
    pub fn symbol<T: Real>(self, norm_sq: T) -> T {
        match self {
            Derivative::Homogeneous(s) => {
                if s == 0.0 {
                    T::one()
                } else if norm_sq == T::zero() {
                    T::zero()
                } else {
                    norm_sq.powf(T::of(s / 2.0))
                }
            }
            Derivative::Inhomogeneous(s) => {
                if s == 0.0 {
                    T::one()
                } else {
                    (T::one() + norm_sq).powf(T::of(s / 2.0))
                }
            }
        }
    }

    pub fn is_identity(self) -> bool {
        matches!(self, Derivative::Homogeneous(s) | Derivative::Inhomogeneous(s) if s == 0.0)
    }
}

/// Dyadic blocks `1, 2, 4, …, N_top` with lattice support; `P_{≤N_top}` is the identity.
pub fn dyadic_blocks<T: Real>(grid: &Grid<T>) -> Vec<u64> {
    let r_max = grid.max_frequency_radius();
    let mut blocks = vec![1u64];
    let mut n = 1u64;
    while T::of(n as f64) < r_max {
        n *= 2;
        blocks.push(n);
    }
    blocks
}

/// Littlewood-Paley projection.
///
/// In `Exact` mode a block above the per-axis Nyquist frequency is flagged as
/// clipped; if it has no lattice support at all the result is exactly zero.
pub fn dyadic_project<T: Real>(field: &Field<T>, block: u64, mode: DyadicMode) -> Result<Projected<T>> {
    if block == 0 || !block.is_power_of_two() {
        return Err(Error::arg(format!("dyadic block must be a power of two, got {block}")));
    }
    let grid = field.grid();
    let norm_sq = grid.frequency_norm_sq();
    let nf = T::of(block as f64);
    let out = match mode {
        DyadicMode::Exact => field.multiplied_real(|i| lp_block(norm_sq[i].sqrt(), block)),
        DyadicMode::Leq => field.multiplied_real(|i| lp_cutoff(norm_sq[i].sqrt() / nf)),
        DyadicMode::Geq => field.multiplied_real(|i| T::one() - lp_cutoff(norm_sq[i].sqrt() / nf)),
    };
    let clipped = mode == DyadicMode::Exact && nf > grid.nyquist();
    Ok(Projected { field: out, clipped })
}

/// `|∇|^s f` or `⟨∇⟩^s f`. A negative homogeneous order needs a mean-zero field.
pub fn fractional_derivative<T: Real>(field: &Field<T>, d: Derivative) -> Result<Field<T>> {
    let spec = field.frequency();
    if let Derivative::Homogeneous(s) = d {
        if s < 0.0 {
            let dc = spec.values()[0].norm();
            let scale = spec.values().iter().map(|z| z.norm()).fold(T::zero(), T::max);
            if dc > T::of(1e-12) * scale.max(T::min_positive_value()) {
                return Err(Error::arg(format!(
                    "|∇|^{s} needs a mean-zero field (|f̂(0)| = {dc})"
                )));
            }
        }
    }
    let norm_sq = field.grid().frequency_norm_sq();
    Ok(spec.multiplied_real(|i| d.symbol(norm_sq[i])))
}

/// Free Schrödinger flow `e^{itΔ}`: multiplier `e^{−it|ξ|²}`.
pub fn free_propagate<T: Real>(field: &Field<T>, t: T) -> Field<T> {
    if t == T::zero() {
        return field.frequency();
    }
    let norm_sq = field.grid().frequency_norm_sq();
    field.multiplied(|i| Complex::from_polar(T::one(), -t * norm_sq[i]))
}

/// Spectral gradient `∇f`, one physical-view field per axis.
pub fn gradient<T: Real>(field: &Field<T>) -> Vec<Field<T>> {
    let grid = field.grid();
    let spec = field.frequency();
    (0..grid.dim())
        .map(|axis| {
            spec.multiplied(|i| {
                let xi = grid.wavenumbers()[grid.unflatten(i)[axis]];
                Complex::new(T::zero(), xi)
            })
            .physical()
        })
        .collect()
}
