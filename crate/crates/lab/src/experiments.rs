//! High-low decomposition runs, `N₀` scaling sweeps of the energy bound and
//! scattering diagnostics.

use std::fmt::Write as _;

use nls_core::randomization::RandomizationPlan;
use nls_core::solver::{energy, evolve_perturbation, mass, SolverConfig, Trajectory};
use nls_core::spectral::{dyadic_project, free_propagate, DyadicMode};
use nls_core::stats::{self, LineFit, TrendStatistic};
use nls_core::{norms::sobolev_norm, Field, Real};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sweep::fmt_float;
use crate::{LabError, Result};

/// Fraction of the recurrence time `L²/(2π)` a run may span.
pub const RECURRENCE_FRACTION: f64 = 0.5;

/// Randomized data split at a dyadic frequency `N₀`.
#[derive(Clone, Debug)]
pub struct HighLowSetup<T: Real> {
    pub data: Field<T>,
    /// Regularity the normalization `N₀^{2(1−s)}` refers to.
    pub s: f64,
    pub n0: u64,
    pub seed: u64,
    pub config: SolverConfig<T>,
    /// Growth of the normalized energy over its initial value that raises the flag.
    pub growth_threshold: f64,
}

/// `f^ω = w₀ + v₀` with `w₀ = P_{≤N₀}f^ω`, `v₀ = P_{≥N₀}f^ω`.
#[derive(Clone, Debug)]
pub struct Decomposition<T: Real> {
    pub f_omega: Field<T>,
    pub w0: Field<T>,
    pub v0: Field<T>,
    /// `|⟨v₀, w₀⟩_{L²}|`; nonzero because the two cutoffs share one octave.
    pub overlap: f64,
}

impl<T: Real> HighLowSetup<T> {
    pub fn new(data: Field<T>, s: f64, n0: u64, seed: u64, config: SolverConfig<T>) -> Self {
        Self { data, s, n0, seed, config, growth_threshold: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.n0 == 0 || !self.n0.is_power_of_two() {
            return Err(LabError::invalid(format!("N0 = {} is not a power of two", self.n0)));
        }
        let nyq = self.data.grid().nyquist().as_f64();
        if 2.0 * self.n0 as f64 > nyq {
            return Err(LabError::invalid(format!(
                "2·N0 = {} exceeds the Nyquist frequency {nyq}",
                2 * self.n0
            )));
        }
        if !(self.growth_threshold > 1.0) {
            return Err(LabError::invalid("growth threshold must exceed 1"));
        }
        Ok(())
    }

    /// `min(t_end, ½·L²/(2π))`.
    pub fn horizon(&self) -> T {
        let cap = T::of(RECURRENCE_FRACTION) * self.data.grid().recurrence_time();
        self.config.t_end.min(cap)
    }

    /// `N₀^{2(1−s)}`.
    pub fn normalization(&self) -> f64 {
        (self.n0 as f64).powf(2.0 * (1.0 - self.s))
    }

    pub fn decomposition(&self) -> Result<Decomposition<T>> {
        self.validate()?;
        let plan = RandomizationPlan::new(self.data.grid(), self.seed)?;
        let f_omega = plan.randomize(&self.data)?;
        let w0 = dyadic_project(&f_omega, self.n0, DyadicMode::Leq)?.field;
        let v0 = f_omega.sub(&w0)?;
        let overlap = v0.inner(&w0)?.norm().as_f64();
        Ok(Decomposition { f_omega, w0, v0, overlap })
    }
}

/// Energy and mass of `w` along a run, normalized by `N₀^{2(1−s)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrack {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub mass: Vec<f64>,
    pub ratio: Vec<f64>,
    pub max_ratio: f64,
    /// `max_ratio / ratio[0]`.
    pub growth: f64,
    pub flagged: bool,
}

impl EnergyTrack {
    pub fn from_trajectory<T: Real>(traj: &Trajectory<T>, normalization: f64, threshold: f64) -> Self {
        let mu = traj.mu();
        let times = traj.times().iter().map(|t| t.as_f64()).collect();
        let energy: Vec<f64> = traj.fields().par_iter().map(|w| energy(w, mu).as_f64()).collect();
        let mass = traj.fields().par_iter().map(|w| mass(w).as_f64()).collect();
        let ratio: Vec<f64> = energy.iter().map(|e| e / normalization).collect();
        let max_ratio = ratio.iter().copied().fold(f64::MIN, f64::max);
        let growth = if ratio[0] > 0.0 { max_ratio / ratio[0] } else { 1.0 };
        Self { times, energy, mass, ratio, max_ratio, growth, flagged: growth > threshold }
    }

    pub fn sup_energy(&self) -> f64 {
        self.energy.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,energy,mass,ratio\n");
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_float(self.times[i]),
                fmt_float(self.energy[i]),
                fmt_float(self.mass[i]),
                fmt_float(self.ratio[i])
            )
            .expect("write to string");
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct HighLowRun<T: Real> {
    pub track: EnergyTrack,
    /// Perturbation trajectory of `w` (carries `v₀`).
    pub trajectory: Trajectory<T>,
    pub overlap: f64,
    pub horizon: f64,
}

/// Evolves `w` from `w₀ = P_{≤N₀}f^ω` around the free flow of `v₀ = P_{≥N₀}f^ω`.
pub fn highlow_run<T: Real>(setup: &HighLowSetup<T>) -> Result<HighLowRun<T>> {
    let parts = setup.decomposition()?;
    let horizon = setup.horizon();
    let config = setup.config.clone().with_t_end(horizon);
    let trajectory = evolve_perturbation(&parts.w0, &parts.v0, &config)?;
    let track = EnergyTrack::from_trajectory(&trajectory, setup.normalization(), setup.growth_threshold);
    Ok(HighLowRun { track, trajectory, overlap: parts.overlap, horizon: horizon.as_f64() })
}

/// One `(N₀, seed)` cell of an [`n0_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n0: u64,
    pub seed: u64,
    pub initial_energy: f64,
    pub sup_energy: f64,
    pub growth: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub s: f64,
    /// `2(1 − s)`.
    pub predicted: f64,
    /// Largest accepted slope, `predicted + slack`.
    pub bound: f64,
    pub cells: Vec<SweepCell>,
    /// `log sup_t E(w)` against `log N₀` over every cell.
    pub fit: LineFit,
    /// Same fit for `E(w₀)`.
    pub initial_fit: LineFit,
    pub passed: bool,
}

/// Slack added to the predicted exponent before the sweep is declared failed.
pub const SLOPE_SLACK: f64 = 0.3;

/// `2(1 − s)`.
pub fn predicted_exponent(s: f64) -> f64 {
    2.0 * (1.0 - s)
}

impl ScalingFit {
    /// Per cell: measured energies, the fitted line and the reference line
    /// `A·N₀^{2(1−s)}` with `A` the least-squares intercept at that slope.
    pub fn to_csv(&self) -> String {
        let lx: Vec<f64> = self.cells.iter().map(|c| (c.n0 as f64).ln()).collect();
        let ly: Vec<f64> = self.cells.iter().map(|c| c.sup_energy.ln()).collect();
        let ref_intercept = stats::mean(&ly) - self.predicted * stats::mean(&lx);
        let mut out = String::from("n0,seed,initial_energy,sup_energy,fitted,reference\n");
        for (c, x) in self.cells.iter().zip(&lx) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.n0,
                c.seed,
                fmt_float(c.initial_energy),
                fmt_float(c.sup_energy),
                fmt_float((self.fit.intercept + self.fit.slope * x).exp()),
                fmt_float((ref_intercept + self.predicted * x).exp())
            )
            .expect("write to string");
        }
        out
    }
}

/// Fits `log sup_t E(w)` against `log N₀` over an `N₀ × seed` grid of high-low runs.
pub fn n0_sweep<T: Real>(
    data: &Field<T>,
    s: f64,
    n0s: &[u64],
    seeds: &[u64],
    config: &SolverConfig<T>,
) -> Result<ScalingFit> {
    let mut distinct = n0s.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct.len() != n0s.len() {
        return Err(LabError::invalid("N0 sweep needs at least three distinct N0 values"));
    }
    if seeds.len() < 3 {
        return Err(LabError::invalid("N0 sweep needs at least three seeds per N0"));
    }
    let jobs: Vec<(u64, u64)> = n0s.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(n0, seed)| {
            let setup = HighLowSetup::new(data.clone(), s, n0, seed, config.clone());
            let run = highlow_run(&setup)?;
            Ok(SweepCell {
                n0,
                seed,
                initial_energy: run.track.energy[0],
                sup_energy: run.track.sup_energy(),
                growth: run.track.growth,
                flagged: run.track.flagged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = cells.iter().map(|c| c.n0 as f64).collect();
    let fit = stats::fit_power_law(&x, &cells.iter().map(|c| c.sup_energy).collect::<Vec<_>>())?;
    let initial_fit = stats::fit_power_law(&x, &cells.iter().map(|c| c.initial_energy).collect::<Vec<_>>())?;
    let predicted = predicted_exponent(s);
    let bound = predicted + SLOPE_SLACK;
    Ok(ScalingFit { s, predicted, bound, passed: fit.slope <= bound, cells, fit, initial_fit })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    /// Largest window as a fraction of the recurrence time.
    pub recurrence_fraction: f64,
    /// Largest Mann-Kendall `τ` of `D(t, T_end)` still counted as non-increasing.
    pub max_tau: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { recurrence_fraction: RECURRENCE_FRACTION, max_tau: 0.0 }
    }
}

/// Pairwise `H¹` distances of the pulled-back profiles `e^{−itΔ}w(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyMatrix {
    pub times: Vec<f64>,
    /// `d[i][j] = D(t_i, t_j)`.
    pub d: Vec<Vec<f64>>,
    /// `D(t_i, T_end)` for every sample before the last.
    pub tail: Vec<f64>,
    pub trend: TrendStatistic,
    pub non_increasing: bool,
}

impl CauchyMatrix {
    pub fn max_entry(&self) -> f64 {
        self.d.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// `D(t_i, t_j) = ‖e^{−it_iΔ}w(t_i) − e^{−it_jΔ}w(t_j)‖_{H¹}` over the saved samples.
pub fn scattering_diagnostic<T: Real>(traj: &Trajectory<T>, cfg: &ScatterConfig) -> Result<CauchyMatrix> {
    if traj.len() < 3 {
        return Err(LabError::invalid(format!("need at least three samples, got {}", traj.len())));
    }
    let times: Vec<f64> = traj.times().iter().map(|t| t.as_f64()).collect();
    let grid = traj.grid().expect("non-empty");
    let window = times[times.len() - 1] - times[0];
    let cap = cfg.recurrence_fraction * grid.recurrence_time().as_f64();
    if window > cap {
        return Err(LabError::invalid(format!("window {window} exceeds the recurrence guard {cap}")));
    }
    let profiles: Vec<Field<T>> = traj
        .times()
        .par_iter()
        .zip(traj.fields())
        .map(|(&t, w)| free_propagate(w, -t))
        .collect();
    let n = profiles.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dist = pairs
        .par_iter()
        .map(|&(i, j)| Ok(sobolev_norm(&profiles[i].sub(&profiles[j])?, 1.0, false)?.as_f64()))
        .collect::<Result<Vec<f64>>>()?;
    let mut d = vec![vec![0.0; n]; n];
    for (&(i, j), &v) in pairs.iter().zip(&dist) {
        d[i][j] = v;
        d[j][i] = v;
    }
    let tail: Vec<f64> = (0..n - 1).map(|i| d[i][n - 1]).collect();
    let trend = stats::mann_kendall(&tail);
    let non_increasing = trend.tau <= cfg.max_tau;
    Ok(CauchyMatrix { times, d, tail, trend, non_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_exponents() {
        assert_eq!(predicted_exponent(0.5), 1.0);
        let s = 3.0 / 7.0 + 0.01;
        assert!((predicted_exponent(s) - 1.122_857_142_857).abs() < 1e-9);
    }
}
