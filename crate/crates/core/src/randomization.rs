//! Wiener randomization `f^ω = Σ_k g_k(ω) □_k f`, synthetic `H^s` data, and
//! Monte Carlo checks of the Gaussian large-deviation machinery.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::norms::{lebesgue_norm, sobolev_norm, y_tilde_norm, z_norm};
use crate::rng::{cube_key, mix, GaussianStream};
use crate::solver::Trajectory;
use crate::spectral::cutoff::unit_bump;
use crate::spectral::{dyadic_project, DyadicMode, UnitPartition};
use crate::stats::{self, LineFit};
use crate::{Error, Field, Grid, Real, Result, View};

/// Partition weights plus one seeded complex Gaussian per unit cube.
#[derive(Clone, Debug)]
pub struct RandomizationPlan<T: Real> {
    partition: UnitPartition<T>,
    seed: u64,
    variance: f64,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> RandomizationPlan<T> {
    /// Plan with `E|g_k|² = 1`.
    pub fn new(grid: &Grid<T>, seed: u64) -> Result<Self> {
        Ok(Self::from_partition(UnitPartition::new(grid)?, seed, 1.0))
    }

    pub fn from_partition(partition: UnitPartition<T>, seed: u64, variance: f64) -> Self {
        let stream = GaussianStream::new(seed);
        let coefficients = (0..partition.cube_count())
            .into_par_iter()
            .map(|slot| {
                let k = partition.cube_at(slot);
                let g = stream.complex(cube_key(&k[..partition.grid().dim()]), variance);
                Complex::new(T::of(g.re), T::of(g.im))
            })
            .collect();
        Self { partition, seed, variance, coefficients }
    }

    pub fn with_variance(self, variance: f64) -> Self {
        Self::from_partition(self.partition, self.seed, variance)
    }

    /// Same partition, new seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self::from_partition(self.partition.clone(), seed, self.variance)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn partition(&self) -> &UnitPartition<T> {
        &self.partition
    }

    pub fn grid(&self) -> &Grid<T> {
        self.partition.grid()
    }

    /// `g_k`, or `None` for a cube that does not touch the lattice.
    pub fn coefficient(&self, k: &[i64]) -> Option<Complex<T>> {
        self.partition.cube_slot(k).map(|slot| self.coefficients[slot])
    }

    /// Replaces every coefficient by `f(k, g_k)`; used to probe which `g_k` a quantity depends on.
    pub fn map_coefficients(mut self, f: impl Fn([i64; 3], Complex<T>) -> Complex<T>) -> Self {
        for (slot, g) in self.coefficients.iter_mut().enumerate() {
            *g = f(self.partition.cube_at(slot), *g);
        }
        self
    }

    /// The frequency multiplier `Σ_k g_k ψ_k(ξ)` at one lattice point.
    fn multiplier(&self, flat: usize) -> Complex<T> {
        let mut m = Complex::new(T::zero(), T::zero());
        self.partition.for_each_cover(flat, |slot, w| m = m + self.coefficients[slot].scale(w));
        m
    }

    /// `f^ω`, returned in frequency view.
    pub fn randomize(&self, f: &Field<T>) -> Result<Field<T>> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let spec = f.frequency();
        let values = spec
            .values()
            .par_iter()
            .enumerate()
            .map(|(i, z)| if z.norm_sqr() == T::zero() { *z } else { *z * self.multiplier(i) })
            .collect();
        Field::from_values(self.grid(), values, View::Frequency)
    }
}

/// Free function form of [`RandomizationPlan::randomize`].
pub fn randomize<T: Real>(f: &Field<T>, plan: &RandomizationPlan<T>) -> Result<Field<T>> {
    plan.randomize(f)
}

/// A base field and a set of distinct seeds.
#[derive(Clone, Debug)]
pub struct Ensemble<T: Real> {
    base: Field<T>,
    seeds: Vec<u64>,
}

impl<T: Real> Ensemble<T> {
    pub fn new(base: Field<T>, seeds: Vec<u64>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::arg("ensemble needs at least one seed"));
        }
        let distinct: HashSet<u64> = seeds.iter().copied().collect();
        if distinct.len() != seeds.len() {
            return Err(Error::arg("ensemble seeds must be pairwise distinct"));
        }
        Ok(Self { base, seeds })
    }

    /// Seeds `first, first + 1, …`.
    pub fn consecutive(base: Field<T>, first: u64, count: usize) -> Result<Self> {
        Self::new(base, (0..count as u64).map(|i| first.wrapping_add(i)).collect())
    }

    pub fn base(&self) -> &Field<T> {
        &self.base
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    /// Evaluates `stat(seed, f^ω)` for every member; output order follows `seeds`.
    pub fn map<R: Send>(
        &self,
        partition: &UnitPartition<T>,
        stat: impl Fn(u64, &Field<T>) -> Result<R> + Sync,
    ) -> Result<Vec<R>> {
        self.seeds
            .par_iter()
            .map(|&seed| {
                let plan = RandomizationPlan::from_partition(partition.clone(), seed, 1.0);
                let f = plan.randomize(&self.base)?;
                stat(seed, &f)
            })
            .collect()
    }
}

/// One ensemble member as written to JSON.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct EnsembleRecord {
    pub seed: u64,
    pub norms: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Profile {
    /// `|f̂(ξ)| = ⟨ξ⟩^{−s−d/2−ε}`.
    PowerLaw,
    /// The power law smoothly cut off at `|ξ| = radius`.
    CompactBump { radius: f64 },
}

/// Synthetic data with prescribed Fourier decay.
///
/// `|f̂(ξ)|` is the continuum transform magnitude; the grid coefficients are
/// scaled so that `‖f‖²_{L²} = L^{−d} Σ_ξ |f̂(ξ)|²`. Radial data are real and
/// nonnegative on the frequency side; otherwise each coefficient carries a
/// uniform random phase drawn from `phase_seed`.
pub fn synthesize_data<T: Real>(
    grid: &Grid<T>,
    s: f64,
    epsilon: f64,
    profile: Profile,
    radial: bool,
    phase_seed: u64,
) -> Result<Field<T>> {
    if !(epsilon > 0.0) {
        return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
    }
    if let Profile::CompactBump { radius } = profile {
        if !(radius > 0.0) {
            return Err(Error::arg("bump radius must be positive"));
        }
    }
    let d = grid.dim() as f64;
    let exponent = -s - d / 2.0 - epsilon;
    let n = grid.n() as f64;
    let l = grid.box_length().as_f64();
    let scale = n.powf(d / 2.0) / l.powf(d);
    let base = ChaCha8Rng::seed_from_u64(phase_seed);
    let values = grid
        .frequency_norm_sq()
        .par_iter()
        .enumerate()
        .map(|(i, &k2)| {
            let k2 = k2.as_f64();
            let mut amp = (1.0 + k2).powf(exponent / 2.0) * scale;
            if let Profile::CompactBump { radius } = profile {
                amp *= unit_bump(k2.sqrt() / (2.0 * radius));
            }
            let z = if radial {
                Complex::new(amp, 0.0)
            } else {
                let mut rng = base.clone();
                rng.set_stream(i as u64);
                rng.set_word_pos(0);
                Complex::from_polar(amp, rng.random::<f64>() * std::f64::consts::TAU)
            };
            Complex::new(T::of(z.re), T::of(z.im))
        })
        .collect();
    Field::from_values(grid, values, View::Frequency)
}

/// Empirical tail of `X = Σ c_n g_n` against the Gaussian law.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailReport {
    pub samples: usize,
    pub coefficient_norm: f64,
    /// Per-component standard deviation of `X`, `‖c‖/√2`.
    pub sigma: f64,
    pub lambda: Vec<f64>,
    pub empirical_prob: Vec<f64>,
    /// `2·exp(−α̂λ²/‖c‖²)` with the fitted `α̂`.
    pub bound: Vec<f64>,
    /// `log P̂` against `λ²/‖c‖²`.
    pub quadratic_fit: LineFit,
    /// `log P̂` against `λ/‖c‖²`; auxiliary.
    pub linear_fit: LineFit,
    /// `(p, ‖X‖_{L^p_ω} / (√p·‖c‖))`.
    pub moment_ratios: Vec<(f64, f64)>,
}

impl TailReport {
    pub fn alpha(&self) -> f64 {
        -self.quadratic_fit.slope
    }

    /// CSV with columns `lambda,empirical_prob,bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,empirical_prob,bound\n");
        for ((l, p), b) in self.lambda.iter().zip(&self.empirical_prob).zip(&self.bound) {
            out.push_str(&format!("{l:.16e},{p:.16e},{b:.16e}\n"));
        }
        out
    }
}

/// Draws `X = Σ c_n g_n` for seeds `mix(base_seed, i)`, `i < samples`.
pub fn gaussian_sums(coefficients: &[Complex<f64>], base_seed: u64, samples: usize) -> Vec<Complex<f64>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let stream = GaussianStream::new(mix(base_seed, i));
            coefficients
                .iter()
                .enumerate()
                .map(|(n, c)| c * stream.complex(n as u64, 1.0))
                .sum()
        })
        .collect()
}

/// Monte Carlo tail of `|Σ c_n g_n|` on `lambdas`, fitted against `λ²/‖c‖²`.
///
/// Points with no exceedances are kept in the curve but left out of the fits.
pub fn tail_check(coefficients: &[Complex<f64>], base_seed: u64, samples: usize, lambdas: &[f64]) -> Result<TailReport> {
    let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::arg("tail check needs a nonzero coefficient sequence"));
    }
    if samples < 1000 {
        return Err(Error::arg(format!("tail check needs at least 1000 samples, got {samples}")));
    }
    let mut mags: Vec<f64> = gaussian_sums(coefficients, base_seed, samples).iter().map(|x| x.norm()).collect();
    let empirical_prob: Vec<f64> = lambdas
        .iter()
        .map(|&l| mags.iter().filter(|&&m| m > l).count() as f64 / samples as f64)
        .collect();
    let kept: Vec<usize> = (0..lambdas.len()).filter(|&i| empirical_prob[i] > 0.0).collect();
    let log_p: Vec<f64> = kept.iter().map(|&i| empirical_prob[i].ln()).collect();
    let xq: Vec<f64> = kept.iter().map(|&i| lambdas[i] * lambdas[i] / (norm * norm)).collect();
    let xl: Vec<f64> = kept.iter().map(|&i| lambdas[i] / (norm * norm)).collect();
    let quadratic_fit = stats::fit_line(&xq, &log_p)?;
    let linear_fit = stats::fit_line(&xl, &log_p)?;
    if quadratic_fit.slope >= 0.0 {
        log::warn!("fitted tail slope {} is not negative", quadratic_fit.slope);
    }
    let alpha = -quadratic_fit.slope;
    let bound = lambdas.iter().map(|&l| 2.0 * (-alpha * l * l / (norm * norm)).exp()).collect();
    mags.sort_by(f64::total_cmp);
    let moment_ratios = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&p| (p, stats::lp_moment(&mags, p) / (p.sqrt() * norm)))
        .collect();
    Ok(TailReport {
        samples,
        coefficient_norm: norm,
        sigma: norm / 2f64.sqrt(),
        lambda: lambdas.to_vec(),
        empirical_prob,
        bound,
        quadratic_fit,
        linear_fit,
        moment_ratios,
    })
}

/// Parameters of the `Ω̃_M` membership test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaProbeConfig {
    pub n0: u64,
    pub s: f64,
    pub epsilon: f64,
    /// Finite horizon standing in for the whole time line.
    pub t_max: f64,
    pub time_samples: usize,
}

/// Per-seed quantities entering `Ω̃_M`, already divided by `‖f‖_{H^s}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaSample {
    pub seed: u64,
    /// `(‖u₀‖_{H^s} + ‖v‖_{Ỹ^s∩Z^s}) / ‖f‖_{H^s}`.
    pub linear_part: f64,
    /// `(N₀^{−(1−s)}‖w₀‖_{Ḣ¹} + ‖w₀‖_{L⁴}) / ‖f‖_{H^s}`.
    pub low_part: f64,
}

impl OmegaSample {
    /// Smallest `M` with `ω ∈ Ω̃_M` (the set is open, so membership needs `M` strictly larger).
    pub fn threshold(&self) -> f64 {
        self.linear_part.max(self.low_part)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaProbe {
    pub samples: Vec<OmegaSample>,
    pub m_grid: Vec<f64>,
    pub fraction: Vec<f64>,
    /// `log(1 − fraction)` against `M²` over points with a nonempty complement.
    pub complement_fit: Option<LineFit>,
}

/// Fraction of seeds in `Ω̃_M` for each `M` in `m_grid`.
pub fn omega_set_probe<T: Real>(
    f: &Field<T>,
    seeds: &[u64],
    m_grid: &[f64],
    config: &OmegaProbeConfig,
) -> Result<OmegaProbe> {
    if seeds.is_empty() {
        return Err(Error::arg("Ω̃_M probe needs at least one seed"));
    }
    let f_norm = sobolev_norm(f, config.s, false)?.as_f64();
    if f_norm == 0.0 {
        return Err(Error::arg("Ω̃_M probe needs nonzero data"));
    }
    let partition = UnitPartition::new(f.grid())?;
    let ensemble = Ensemble::new(f.clone(), seeds.to_vec())?;
    let times = Trajectory::uniform_times(T::of(config.t_max), config.time_samples);
    let samples = ensemble.map(&partition, |seed, fw| {
        let v0 = dyadic_project(fw, config.n0, DyadicMode::Geq)?.field;
        let w0 = dyadic_project(fw, config.n0, DyadicMode::Leq)?.field;
        let v = Trajectory::free_evolution(&v0, &times)?;
        let lin = sobolev_norm(fw, config.s, false)?.as_f64()
            + y_tilde_norm(&v, config.s, config.epsilon)?.value
            + z_norm(&v, config.s, config.epsilon)?.value;
        let low = (config.n0 as f64).powf(-(1.0 - config.s)) * sobolev_norm(&w0, 1.0, true)?.as_f64()
            + lebesgue_norm(&w0, 4.0).as_f64();
        Ok(OmegaSample { seed, linear_part: lin / f_norm, low_part: low / f_norm })
    })?;
    let fraction: Vec<f64> = m_grid
        .iter()
        .map(|&m| samples.iter().filter(|s| s.threshold() < m).count() as f64 / samples.len() as f64)
        .collect();
    let pts: Vec<(f64, f64)> = m_grid
        .iter()
        .zip(&fraction)
        .filter(|(_, &p)| p < 1.0)
        .map(|(&m, &p)| (m * m, (1.0 - p).ln()))
        .collect();
    let complement_fit = if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        stats::fit_line(&x, &y).ok()
    } else {
        None
    };
    Ok(OmegaProbe { samples, m_grid: m_grid.to_vec(), fraction, complement_fit })
}
