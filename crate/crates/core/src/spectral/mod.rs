//! Grid, Fourier transform, frequency projectors and the free propagator.

pub mod cutoff;
mod fft;
mod field;
mod grid;
mod ops;
pub mod partition;

pub(crate) use fft::NdFft;
pub use field::{Field, View};
pub use grid::Grid;
pub use ops::{
    dyadic_blocks, dyadic_project, fractional_derivative, free_propagate, gradient, Derivative,
    DyadicMode, Projected,
};
pub use partition::UnitPartition;
