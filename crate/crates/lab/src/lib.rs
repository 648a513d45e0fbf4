//! Estimate checks and end-to-end experiments built on `nls-core`.
//!
//! [`estimates`] measures the ratio `LHS / RHS` of the linear, bilinear,
//! smoothing and randomized inequalities over parameter sweeps;
//! [`experiments`] runs the high-low decomposition, the `N₀` energy scaling
//! sweep and the scattering diagnostic.

pub mod error;
pub mod estimates;
pub mod experiments;
pub mod sweep;

pub use error::{LabError, Result};
pub use sweep::{RatioSweep, SweepPoint};

pub type HighLowSetup64 = experiments::HighLowSetup<f64>;
