//! Empirical ratio checks of the linear, bilinear, smoothing and randomized
//! estimates. Every function returns measured quantities; thresholds are left
//! to callers.

use std::collections::HashMap;

use nls_core::norms::{dyadic_mixed_norm, lebesgue_norm, mixed_norm, sobolev_norm, time_norm};
use nls_core::rng::{cube_key, mix, GaussianStream};
use nls_core::solver::Trajectory;
use nls_core::spectral::cutoff::lp_block;
use nls_core::spectral::partition::{partition_profile, UnitPartition};
use nls_core::spectral::{fractional_derivative, free_propagate, Derivative, DyadicMode};
use nls_core::stats::{self, LineFit};
use nls_core::{randomization::Ensemble, Complex, Field, Grid, Real, View};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sweep::{RatioSweep, SweepPoint};
use crate::{LabError, Result};

const ADMISSIBILITY_TOL: f64 = 1e-12;
const MEAN_ZERO_TOL: f64 = 1e-12;
/// Relative spread allowed between Fourier coefficients on one lattice sphere.
pub const RADIAL_TOL: f64 = 1e-8;
/// Smallest ensemble accepted by [`almost_sure_strichartz_stats`].
pub const MIN_SEEDS: usize = 200;

/// Uniformly sampled interval `[0, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_end: f64,
    pub samples: usize,
}

impl TimeWindow {
    pub fn new(t_end: f64, samples: usize) -> Self {
        Self { t_end, samples }
    }

    fn times<T: Real>(&self) -> Result<Vec<T>> {
        if !(self.t_end > 0.0) || self.samples < 2 {
            return Err(LabError::invalid(format!(
                "time window needs t_end > 0 and at least two samples, got {} and {}",
                self.t_end, self.samples
            )));
        }
        Ok(Trajectory::uniform_times(T::of(self.t_end), self.samples))
    }
}

/// `2/q + d/r − d/2`.
pub fn admissibility_defect(q: f64, r: f64, dim: usize) -> f64 {
    let d = dim as f64;
    2.0 / q + d / r - d / 2.0
}

/// Rejects pairs that are not `L²`-admissible; `q = 2` needs `allow_endpoint`.
pub fn check_admissible(q: f64, r: f64, dim: usize, allow_endpoint: bool) -> Result<()> {
    let defect = admissibility_defect(q, r, dim);
    let in_range = q >= 2.0 && r >= 2.0;
    let forbidden = q == 2.0 && r.is_infinite() && dim == 2;
    if !in_range || forbidden || !(defect.abs() <= ADMISSIBILITY_TOL) {
        return Err(LabError::Inadmissible { q, r, dim, defect });
    }
    if q == 2.0 && !allow_endpoint {
        return Err(LabError::invalid("endpoint pair q = 2 is excluded"));
    }
    Ok(())
}

/// `‖e^{itΔ}φ‖_{L^q_t L^r_x([0,T])} / ‖φ‖_{L²}`.
pub fn strichartz_ratio<T: Real>(phi: &Field<T>, q: f64, r: f64, window: TimeWindow) -> Result<f64> {
    check_admissible(q, r, phi.grid().dim(), false)?;
    let norm = phi.l2_norm().as_f64();
    if norm == 0.0 {
        return Err(LabError::invalid("ratio undefined for φ = 0"));
    }
    let traj = Trajectory::free_evolution(phi, &window.times::<T>()?)?;
    Ok(mixed_norm(&traj, q, r)?.as_f64() / norm)
}

/// `P_N` applied to `exp(−N²|x − c|²/2)`, `c` the box centre: one profile rescaled to frequency `N`.
pub fn rescaled_gaussian<T: Real>(grid: &Grid<T>, block: u64) -> Result<Field<T>> {
    let n = T::of(block as f64);
    let c = grid.box_length() / T::of(2.0);
    let dim = grid.dim();
    let g = Field::from_fn(grid, |x| {
        let r2 = x[..dim].iter().fold(T::zero(), |acc, &xi| acc + (xi - c) * (xi - c));
        Complex::new((-(n * n) * r2 / T::of(2.0)).exp(), T::zero())
    });
    Ok(nls_core::spectral::dyadic_project(&g, block, DyadicMode::Exact)?.field)
}

/// Strichartz ratio of [`rescaled_gaussian`] data with horizon `t_unit/N²`.
pub fn strichartz_sweep<T: Real>(
    grid: &Grid<T>,
    blocks: &[u64],
    q: f64,
    r: f64,
    t_unit: f64,
    samples: usize,
) -> Result<RatioSweep> {
    let points = blocks
        .par_iter()
        .map(|&n| {
            let phi = rescaled_gaussian(grid, n)?;
            let window = TimeWindow::new(t_unit / (n * n) as f64, samples);
            let ratio = strichartz_ratio(&phi, q, r, window)?;
            SweepPoint::new([("N", n as f64), ("q", q), ("r", r)], ratio, 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = RatioSweep::new("strichartz", points);
    sweep.fit_axis("N")?;
    Ok(sweep)
}

/// Seeded band-limited data: unit-variance complex Gaussians times the `P_N` multiplier.
///
/// Coefficients are keyed by signed lattice mode, so the same seed gives the
/// same data on any grid that resolves the block.
pub fn random_block<T: Real>(grid: &Grid<T>, block: u64, seed: u64) -> Field<T> {
    let stream = GaussianStream::new(seed);
    let norm_sq = grid.frequency_norm_sq();
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|i| {
            let w = lp_block(norm_sq[i].sqrt(), block);
            if w == T::zero() {
                return Complex::new(T::zero(), T::zero());
            }
            let idx = grid.unflatten(i);
            let modes: Vec<i64> = idx[..dim].iter().map(|&j| grid.signed_mode(j)).collect();
            let g = stream.complex(cube_key(&modes), 1.0);
            Complex::new(T::of(g.re), T::of(g.im)).scale(w)
        })
        .collect();
    Field::from_values(grid, values, View::Frequency).expect("length matches grid")
}

/// Exponents `(a, b)` of the bilinear normalizer `M^a / N^b`.
pub fn bilinear_exponents(q: f64, r: f64) -> (f64, f64) {
    (4.0 - 4.0 / r - 2.0 / q, 1.0 - 1.0 / r)
}

pub fn bilinear_normalizer(n: u64, m: u64, q: f64, r: f64) -> f64 {
    let (a, b) = bilinear_exponents(q, r);
    (m as f64).powf(a) / (n as f64).powf(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearConfig {
    pub q: f64,
    pub r: f64,
    pub time_samples: usize,
    /// Evolve the low-frequency factor backwards (`e^{−itΔ}`).
    pub conjugate: bool,
    /// Time horizon; `None` uses `L/(2N)`, the crossing time of the box at group speed `2N`.
    pub horizon: Option<f64>,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        Self { q: 2.0, r: 2.0, time_samples: 16, conjugate: false, horizon: None }
    }
}

/// Ratios of one `(N, M)` pair across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearPoint {
    pub n: u64,
    pub m: u64,
    pub horizon: f64,
    pub normalizer: f64,
    pub seeds: Vec<u64>,
    pub ratios: Vec<f64>,
}

impl BilinearPoint {
    pub fn median(&self) -> f64 {
        stats::median(&self.ratios)
    }

    /// `max/min` of the per-seed ratios.
    pub fn dispersion(&self) -> f64 {
        let max = self.ratios.iter().copied().fold(f64::MIN, f64::max);
        let min = self.ratios.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }
}

fn check_bilinear<T: Real>(grid: &Grid<T>, n: u64, m: u64, cfg: &BilinearConfig) -> Result<()> {
    let (q, r) = (cfg.q, cfg.r);
    if !(1.0..=2.0).contains(&q) || !(1.0..=2.0).contains(&r) || !(1.0 / q + 2.0 / r < 2.0) {
        return Err(LabError::invalid(format!(
            "bilinear exponents need 1 ≤ q, r ≤ 2 and 1/q + 2/r < 2, got ({q}, {r})"
        )));
    }
    for b in [n, m] {
        if b == 0 || !b.is_power_of_two() {
            return Err(LabError::invalid(format!("block {b} is not a power of two")));
        }
    }
    if 8 * m > n {
        return Err(LabError::invalid(format!("M ≪ N violated: M = {m}, N = {n} (need M ≤ N/8)")));
    }
    let nyq = grid.nyquist().as_f64();
    if 2.0 * n as f64 > nyq {
        return Err(LabError::invalid(format!(
            "block N = {n} reaches |ξ| = {} beyond the Nyquist frequency {nyq}",
            2 * n
        )));
    }
    if cfg.time_samples < 2 {
        return Err(LabError::invalid("bilinear ratio needs at least two time samples"));
    }
    Ok(())
}

/// `‖(e^{itΔ}φ)(e^{±itΔ}ψ)‖_{L^q_tL^r_x} / (M^a N^{−b} ‖φ‖‖ψ‖)` for given block data.
pub fn bilinear_pair_ratio<T: Real>(
    phi: &Field<T>,
    psi: &Field<T>,
    n: u64,
    m: u64,
    cfg: &BilinearConfig,
) -> Result<f64> {
    let grid = phi.grid();
    if psi.grid() != grid {
        return Err(nls_core::Error::GridMismatch.into());
    }
    check_bilinear(grid, n, m, cfg)?;
    let norms = phi.l2_norm().as_f64() * psi.l2_norm().as_f64();
    if norms == 0.0 {
        return Err(LabError::invalid("ratio undefined for vanishing data"));
    }
    let times: Vec<T> = TimeWindow::new(bilinear_horizon(grid, n, cfg), cfg.time_samples).times()?;
    let sign = if cfg.conjugate { -T::one() } else { T::one() };
    let spatial: Vec<T> = times
        .iter()
        .map(|&t| {
            let u = free_propagate(phi, t).into_view(View::Physical);
            let v = free_propagate(psi, sign * t).into_view(View::Physical);
            let prod = u.values().iter().zip(v.values()).map(|(a, b)| a * b).collect();
            let prod = Field::from_values(grid, prod, View::Physical).expect("grid length");
            lebesgue_norm(&prod, cfg.r)
        })
        .collect();
    let lhs = time_norm(&times, &spatial, cfg.q).as_f64();
    Ok(lhs / (bilinear_normalizer(n, m, cfg.q, cfg.r) * norms))
}

fn bilinear_horizon<T: Real>(grid: &Grid<T>, n: u64, cfg: &BilinearConfig) -> f64 {
    cfg.horizon.unwrap_or(grid.box_length().as_f64() / (2.0 * n as f64))
}

/// [`bilinear_pair_ratio`] of seeded [`random_block`] data, one ratio per seed.
pub fn bilinear_ratio<T: Real>(
    grid: &Grid<T>,
    n: u64,
    m: u64,
    seeds: &[u64],
    cfg: &BilinearConfig,
) -> Result<BilinearPoint> {
    check_bilinear(grid, n, m, cfg)?;
    if seeds.is_empty() {
        return Err(LabError::invalid("bilinear ratio needs at least one seed"));
    }
    let ratios = seeds
        .iter()
        .map(|&seed| {
            let phi = random_block(grid, n, mix(seed, 1));
            let psi = random_block(grid, m, mix(seed, 2));
            bilinear_pair_ratio(&phi, &psi, n, m, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BilinearPoint {
        n,
        m,
        horizon: bilinear_horizon(grid, n, cfg),
        normalizer: bilinear_normalizer(n, m, cfg.q, cfg.r),
        seeds: seeds.to_vec(),
        ratios,
    })
}

/// Bilinear ratios for fixed `M` over several `N`; one sweep point per `(N, seed)`.
pub fn bilinear_sweep<T: Real>(
    grid: &Grid<T>,
    m: u64,
    ns: &[u64],
    seeds: &[u64],
    cfg: &BilinearConfig,
) -> Result<(RatioSweep, Vec<BilinearPoint>)> {
    let per_n = ns
        .par_iter()
        .map(|&n| bilinear_ratio(grid, n, m, seeds, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    for bp in &per_n {
        for (&seed, &ratio) in bp.seeds.iter().zip(&bp.ratios) {
            points.push(SweepPoint::new(
                [("N", bp.n as f64), ("M", m as f64), ("q", cfg.q), ("r", cfg.r), ("seed", seed as f64)],
                ratio * bp.normalizer,
                bp.normalizer,
            )?);
        }
    }
    let mut sweep = RatioSweep::new("bilinear", points);
    sweep.fit_axis("N")?;
    Ok((sweep, per_n))
}

/// `e^{iN x₁} exp(−|x|²/(2w²))` about the origin with the mean mode removed.
pub fn modulated_packet<T: Real>(grid: &Grid<T>, frequency: f64, width: f64) -> Field<T> {
    let mut spec = Field::from_values(
        grid,
        (0..grid.len())
            .map(|i| {
                let x = grid.centered_position(i);
                let r2 = grid.centered_radius(i).as_f64().powi(2);
                Complex::from_polar(T::of((-r2 / (2.0 * width * width)).exp()), T::of(frequency) * x[0])
            })
            .collect(),
        View::Physical,
    )
    .expect("grid length")
    .into_view(View::Frequency);
    spec.values_mut()[0] = Complex::new(T::zero(), T::zero());
    spec
}

fn check_mean_zero<T: Real>(f: &Field<T>) -> Result<()> {
    let spec = f.frequency();
    let dc = spec.values()[0].norm().as_f64();
    let scale = spec.max_abs().as_f64();
    if dc > MEAN_ZERO_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(LabError::invalid(format!("data must have zero mean, |f̂(0)| = {dc:e}")));
    }
    Ok(())
}

/// Per radius `R`: `R^{−1/2}‖e^{itΔ}f‖_{L²_t L²(|x| ≤ R)} / ‖|∇|^{−1/2}f‖_{L²}`.
///
/// Balls are centred at the origin with the minimum-image distance.
pub fn local_smoothing_ratio<T: Real>(f: &Field<T>, radii: &[f64], window: TimeWindow) -> Result<RatioSweep> {
    check_mean_zero(f)?;
    let grid = f.grid();
    let quarter = grid.box_length().as_f64() / 4.0;
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r <= quarter)) {
        return Err(LabError::invalid(format!("radii must lie in (0, L/4 = {quarter}]")));
    }
    let rhs = fractional_derivative(f, Derivative::Homogeneous(-0.5))?.l2_norm().as_f64();
    if rhs == 0.0 {
        return Err(LabError::invalid("ratio undefined for f = 0"));
    }
    let times: Vec<T> = window.times()?;
    let radius: Vec<f64> = (0..grid.len()).map(|i| grid.centered_radius(i).as_f64()).collect();
    let cv = grid.cell_volume().as_f64();
    // ball_mass[t][j] = ∫_{|x|≤R_j} |u(t)|²
    let ball_mass: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let u = free_propagate(f, t).into_view(View::Physical);
            radii
                .iter()
                .map(|&big_r| {
                    cv * u
                        .values()
                        .iter()
                        .zip(&radius)
                        .filter(|(_, &rx)| rx <= big_r)
                        .map(|(z, _)| z.norm_sqr().as_f64())
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let tf: Vec<f64> = times.iter().map(|t| t.as_f64()).collect();
    let points = radii
        .iter()
        .enumerate()
        .map(|(j, &big_r)| {
            let series: Vec<f64> = ball_mass.iter().map(|row| row[j]).collect();
            let lhs = stats::trapezoid(&tf, &series).sqrt() / big_r.sqrt();
            SweepPoint::new([("R", big_r)], lhs, rhs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioSweep::new("local_smoothing", points))
}

/// Sup-over-`R` smoothing ratio of [`modulated_packet`] data at carrier `N`, horizon `L/(4N)`.
pub fn local_smoothing_sweep<T: Real>(
    grid: &Grid<T>,
    frequencies: &[u64],
    radii: &[f64],
    width: f64,
    samples: usize,
) -> Result<RatioSweep> {
    let l = grid.box_length().as_f64();
    let points = frequencies
        .par_iter()
        .map(|&n| {
            let f = modulated_packet(grid, n as f64, width);
            let per_r = local_smoothing_ratio(&f, radii, TimeWindow::new(l / (4.0 * n as f64), samples))?;
            let best = per_r
                .points
                .iter()
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
                .expect("non-empty radii");
            SweepPoint::new(
                [("N", n as f64), ("R", best.axis("R").expect("radius axis"))],
                best.lhs,
                best.rhs,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = RatioSweep::new("local_smoothing_sup", points);
    sweep.fit_axis("N")?;
    Ok(sweep)
}

/// Per-axis weights `w(a, b) = Σ_k ψ(ξ_a − k)ψ(ξ_b − k)` for `b = a − δ`, `|δ| ≤ reach`.
struct AxisOverlap {
    reach: i64,
    /// `table[i][δ + reach]`; zero where `a − δ` leaves the lattice.
    table: Vec<Vec<f64>>,
}

impl AxisOverlap {
    fn new<T: Real>(grid: &Grid<T>) -> Self {
        let n = grid.n() as i64;
        let h = grid.frequency_spacing().as_f64();
        // two frequencies share a unit cube only if they differ by less than 2
        let reach = ((2.0 / h).ceil() as i64).min(n / 2 - 1).max(0);
        let table = (0..grid.n())
            .map(|i| {
                let ma = grid.signed_mode(i);
                let xa = ma as f64 * h;
                (-reach..=reach)
                    .map(|delta| {
                        let mb = ma - delta;
                        if mb < -n / 2 || mb >= n - n / 2 {
                            return 0.0;
                        }
                        let xb = mb as f64 * h;
                        let base = xa.floor() as i64;
                        (base - 1..=base + 2)
                            .map(|k| partition_profile(xa - k as f64) * partition_profile(xb - k as f64))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Self { reach, table }
    }
}

/// Square function `S(x) = (Σ_k |□_k f(x)|²)^{1/2}` on the grid.
///
/// Assembled from the spectrum of `S²`, which lives on lattice offsets within
/// one cube diameter: `Ŝ²(δ) ∝ Σ_ξ W(ξ, ξ−δ) f̂(ξ) conj f̂(ξ−δ)` with the
/// tensor-product overlap weight `W`. Values match pointwise evaluation of
/// every `□_k f` on the grid.
pub fn square_function<T: Real>(f: &Field<T>) -> Result<Vec<f64>> {
    let grid = f.grid();
    UnitPartition::new(grid)?;
    let dim = grid.dim();
    let n = grid.n() as i64;
    let overlap = AxisOverlap::new(grid);
    let reach = overlap.reach;
    let spec: Vec<Complex<f64>> = f.frequency().values().iter().map(|z| Complex::new(z.re.as_f64(), z.im.as_f64())).collect();
    let width = (2 * reach + 1) as usize;
    let offsets: Vec<[i64; 3]> = (0..width.pow(dim as u32))
        .map(|mut c| {
            let mut d = [0i64; 3];
            for axis in (0..dim).rev() {
                d[axis] = (c % width) as i64 - reach;
                c /= width;
            }
            d
        })
        .collect();
    let coeffs: Vec<Complex<f64>> = offsets
        .par_iter()
        .map(|delta| {
            let mut acc = Complex::new(0.0, 0.0);
            for (i, &a) in spec.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let idx = grid.unflatten(i);
                let mut w = 1.0;
                let mut other = [0usize; 3];
                for axis in 0..dim {
                    w *= overlap.table[idx[axis]][(delta[axis] + reach) as usize];
                    other[axis] = (idx[axis] as i64 - delta[axis]).rem_euclid(n) as usize;
                }
                if w != 0.0 {
                    acc += a * spec[grid.flatten(&other[..dim])].conj() * w;
                }
            }
            acc
        })
        .collect();
    let total = grid.len() as f64;
    let mut values = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    for (delta, c) in offsets.iter().zip(&coeffs) {
        let mut idx = [0usize; 3];
        for axis in 0..dim {
            idx[axis] = delta[axis].rem_euclid(n) as usize;
        }
        let slot = &mut values[grid.flatten(&idx[..dim])];
        *slot = *slot + Complex::new(T::of(c.re / total.sqrt()), T::of(c.im / total.sqrt()));
    }
    let s2 = Field::from_values(grid, values, View::Frequency)?.into_view(View::Physical);
    Ok(s2.values().iter().map(|z| z.re.as_f64().max(0.0).sqrt()).collect())
}

/// `‖|x|^{1−2/r} S‖_{L^r}` with `|x|` the minimum-image distance to the origin.
pub fn weighted_square_norm<T: Real>(f: &Field<T>, r: f64) -> Result<f64> {
    if !(r >= 2.0) {
        return Err(LabError::invalid(format!("r must lie in [2, ∞], got {r}")));
    }
    let grid = f.grid();
    let a = 1.0 - 2.0 / r;
    let s = square_function(f)?;
    let values = s
        .iter()
        .enumerate()
        .map(|(i, &si)| {
            let w = if a == 0.0 { 1.0 } else { grid.centered_radius(i).as_f64().powf(a) };
            Complex::new(T::of(w * si), T::zero())
        })
        .collect();
    let weighted = Field::from_values(grid, values, View::Physical)?;
    Ok(lebesgue_norm(&weighted, r).as_f64())
}

/// Largest relative spread of `f̂` over lattice points of equal `|k|²`; zero for radial data.
pub fn radial_defect<T: Real>(f: &Field<T>) -> f64 {
    let grid = f.grid();
    let spec = f.frequency();
    let scale = spec.max_abs().as_f64();
    if scale == 0.0 {
        return 0.0;
    }
    let dim = grid.dim();
    let mut first: HashMap<i64, Complex<f64>> = HashMap::new();
    let mut defect = 0.0f64;
    for (i, z) in spec.values().iter().enumerate() {
        let idx = grid.unflatten(i);
        let k2: i64 = idx[..dim].iter().map(|&j| grid.signed_mode(j).pow(2)).sum();
        let z = Complex::new(z.re.as_f64(), z.im.as_f64());
        let reference = *first.entry(k2).or_insert(z);
        defect = defect.max((z - reference).norm() / scale);
    }
    defect
}

/// Radial data `f̂(ξ) = exp(−|ξ|²/(2λ²))`, concentrated at scale `1/λ` around the origin.
pub fn radial_gaussian<T: Real>(grid: &Grid<T>, lambda: f64) -> Field<T> {
    let norm_sq = grid.frequency_norm_sq();
    let values = norm_sq
        .iter()
        .map(|&k2| Complex::new(T::of((-k2.as_f64() / (2.0 * lambda * lambda)).exp()), T::zero()))
        .collect();
    Field::from_values(grid, values, View::Frequency).expect("grid length")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSobolev {
    pub r: f64,
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub radial_defect: f64,
}

/// `‖|x|^{1−2/r}‖f_k‖_{l²_k}‖_{L^r} / ‖f‖_{H^ε}` for radial data on a 3-D grid.
pub fn radial_square_sobolev_ratio<T: Real>(f: &Field<T>, r: f64, epsilon: f64) -> Result<RadialSobolev> {
    if f.grid().dim() != 3 {
        return Err(LabError::invalid("radial square-function estimate is three-dimensional"));
    }
    let defect = radial_defect(f);
    if defect > RADIAL_TOL {
        return Err(LabError::invalid(format!("data are not radial: defect {defect:e}")));
    }
    let lhs = weighted_square_norm(f, r)?;
    let rhs = sobolev_norm(f, epsilon, false)?.as_f64();
    if rhs == 0.0 {
        return Err(LabError::invalid("ratio undefined for f = 0"));
    }
    Ok(RadialSobolev { r, epsilon, lhs, rhs, ratio: lhs / rhs, radial_defect: defect })
}

/// Space-time norm evaluated on each randomized sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub derivative: Derivative,
    pub q: f64,
    pub r: f64,
    pub window: TimeWindow,
    /// Use the dyadic `l²_N` form instead of the plain mixed norm.
    pub dyadic: bool,
}

impl NormSpec {
    /// The data norm the estimate is measured against, with the same derivative order.
    fn data_norm<T: Real>(&self, f: &Field<T>) -> Result<f64> {
        Ok(match self.derivative {
            Derivative::Homogeneous(s) => sobolev_norm(f, s, true)?,
            Derivative::Inhomogeneous(s) => sobolev_norm(f, s, false)?,
        }
        .as_f64())
    }

    pub fn evaluate<T: Real>(&self, f: &Field<T>) -> Result<f64> {
        let g = fractional_derivative(f, self.derivative)?;
        let traj = Trajectory::free_evolution(&g, &self.window.times::<T>()?)?;
        Ok(if self.dyadic {
            dyadic_mixed_norm(&traj, Derivative::none(), self.q, self.r)?.value
        } else {
            mixed_norm(&traj, self.q, self.r)?.as_f64()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: f64,
    /// `(E_ω X^p)^{1/p}`.
    pub moment: f64,
    /// `moment / (√p ‖f‖)`.
    pub normalized: f64,
}

/// Distribution of a randomized space-time norm over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostSureStats {
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub data_norm: f64,
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    /// Monte Carlo standard error of the median, `1.2533·σ/√n`.
    pub median_se: f64,
    pub moments: Vec<MomentRow>,
    /// `moment(8) / moment(2)`.
    pub moment_ratio: f64,
    /// Whether the normalized moments never increase with `p`.
    pub non_increasing: bool,
    /// `log P(X > λ)` against `λ²` over upper quantiles; `None` for degenerate samples.
    pub tail_fit: Option<LineFit>,
}

const MOMENT_ORDERS: [f64; 3] = [2.0, 4.0, 8.0];
const TAIL_QUANTILES: [f64; 6] = [0.5, 0.7, 0.8, 0.9, 0.95, 0.98];

/// Randomizes `f` with every seed and summarizes the resulting norms.
pub fn almost_sure_strichartz_stats<T: Real>(f: &Field<T>, seeds: &[u64], spec: &NormSpec) -> Result<AlmostSureStats> {
    if seeds.len() < MIN_SEEDS {
        return Err(LabError::invalid(format!("need at least {MIN_SEEDS} seeds, got {}", seeds.len())));
    }
    let ensemble = Ensemble::new(f.clone(), seeds.to_vec())?;
    let partition = UnitPartition::new(f.grid())?;
    let values = ensemble.map(&partition, |_, fw| spec.evaluate(fw).map_err(lab_to_core))?;
    let data_norm = spec.data_norm(f)?;
    let moments: Vec<MomentRow> = MOMENT_ORDERS
        .iter()
        .map(|&p| {
            let moment = stats::lp_moment(&values, p);
            let normalized = if data_norm > 0.0 { moment / (p.sqrt() * data_norm) } else { 0.0 };
            MomentRow { p, moment, normalized }
        })
        .collect();
    let non_increasing = moments.windows(2).all(|w| w[1].normalized <= w[0].normalized);
    let moment_ratio = if moments[0].moment > 0.0 { moments[2].moment / moments[0].moment } else { 0.0 };
    let sd = stats::std_dev(&values);
    Ok(AlmostSureStats {
        seeds: seeds.to_vec(),
        mean: stats::mean(&values),
        median: stats::median(&values),
        std_dev: sd,
        median_se: 1.2533 * sd / (values.len() as f64).sqrt(),
        tail_fit: tail_fit(&values),
        values,
        data_norm,
        moments,
        moment_ratio,
        non_increasing,
    })
}

fn lab_to_core(e: LabError) -> nls_core::Error {
    match e {
        LabError::Core(c) => c,
        other => nls_core::Error::InvalidArgument(other.to_string()),
    }
}

fn tail_fit(values: &[f64]) -> Option<LineFit> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = TAIL_QUANTILES
        .iter()
        .filter_map(|&qt| {
            let lambda = sorted[((qt * n) as usize).min(sorted.len() - 1)];
            let above = sorted.iter().filter(|&&v| v > lambda).count();
            (above > 0).then(|| (lambda * lambda, (above as f64 / n).ln()))
        })
        .unzip();
    stats::fit_line(&x, &y).ok()
}
