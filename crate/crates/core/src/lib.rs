//! Spectral toolkit for the cubic nonlinear Schrödinger equation
//! `i∂ₜu + Δu = μ|u|²u` on a periodic box, with Wiener-randomized data.
//!
//! Every numerical routine is generic over the scalar type through [`Real`];
//! the `*64` / `*32` aliases below fix the scalar for callers that do not
//! care.

pub mod error;
pub mod io;
pub mod morawetz;
pub mod norms;
pub mod randomization;
pub mod real;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use real::Real;
pub use spectral::{Field, Grid, Projected, View};

pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Trajectory64 = solver::Trajectory<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type RandomizationPlan64 = randomization::RandomizationPlan<f64>;

pub type Grid32 = Grid<f32>;
pub type Field32 = Field<f32>;
pub type Trajectory32 = solver::Trajectory<f32>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
