//! Split-step Fourier integration of `i∂ₜu + Δu = μ|u|²u` and of the
//! perturbation equation `i∂ₜw + Δw = μ|v + w|²(v + w)` with `v = e^{itΔ}v₀`.
//!
//! Both sub-flows are solved exactly: the linear one by the multiplier
//! `e^{−iτ|ξ|²}`, the nonlinear one by the pointwise phase rotation
//! `u ↦ u·e^{−iμ|u|²τ}`. The state is carried in frequency view between
//! steps, so a run resumed from a frequency-view checkpoint reproduces the
//! uninterrupted run bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::norms::sobolev_norm;
use crate::spectral::{free_propagate, gradient};
use crate::{io, Error, Field, Grid, Real, Result, View};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `L(τ/2) N(τ) L(τ/2)`, second order.
    Strang,
    /// `L(τ) N(τ)`, first order.
    Lie,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig<T> {
    pub dt: T,
    /// Horizon; rounded to a whole number of steps.
    pub t_end: T,
    /// Nonlinear coupling. `+1` defocusing, `−1` focusing, `0` for linear control runs.
    pub mu: T,
    /// Zero the top third of every axis after each nonlinear substep (ignored when `mu = 0`).
    pub dealias: bool,
    pub save_stride: usize,
    pub scheme: Scheme,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        Self { dt, t_end, mu: T::one(), dealias: true, save_stride: 1, scheme: Scheme::Strang }
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.save_stride = stride;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_t_end(mut self, t_end: T) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::arg(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(Error::arg(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.save_stride == 0 {
            return Err(Error::arg("save_stride must be at least 1"));
        }
        if !self.mu.is_finite() {
            return Err(Error::arg("mu must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Time of the `k`-th step boundary.
    pub fn time_of(&self, step: usize) -> T {
        T::of_usize(step) * self.dt
    }
}

/// What a [`Trajectory`] is a solution of.
#[derive(Clone, Debug)]
pub enum EquationKind<T: Real> {
    Full,
    /// Fields hold `w`; the linear part is `e^{itΔ}v₀`.
    Perturbation { v0: Field<T> },
    /// Exact free evolution sampled at the stored times.
    Free,
}

impl<T: Real> EquationKind<T> {
    pub fn label(&self) -> &'static str {
        match self {
            EquationKind::Full => "full",
            EquationKind::Perturbation { .. } => "perturbation",
            EquationKind::Free => "free",
        }
    }
}

/// Time-stamped sequence of fields on one grid.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    times: Vec<T>,
    fields: Vec<Field<T>>,
    config: Option<SolverConfig<T>>,
    kind: EquationKind<T>,
    /// Global index of the last step taken, for checkpoints.
    last_step: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn new(
        times: Vec<T>,
        fields: Vec<Field<T>>,
        kind: EquationKind<T>,
        config: Option<SolverConfig<T>>,
    ) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::arg("times and fields differ in length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("trajectory times must be strictly increasing"));
        }
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| f.grid() != first.grid()) {
                return Err(Error::GridMismatch);
            }
        }
        let last_step = match &config {
            Some(c) => times.last().map(|t| (*t / c.dt).round().to_usize().unwrap_or(0)).unwrap_or(0),
            None => 0,
        };
        Ok(Self { times, fields, config, kind, last_step })
    }

    /// `e^{itΔ}φ` sampled exactly at `times`.
    pub fn free_evolution(phi: &Field<T>, times: &[T]) -> Result<Self> {
        let fields = times.iter().map(|&t| free_propagate(phi, t)).collect();
        Self::new(times.to_vec(), fields, EquationKind::Free, None)
    }

    /// `times = k·T/(samples−1)`, `k = 0..samples`.
    pub fn uniform_times(t_end: T, samples: usize) -> Vec<T> {
        let m = samples.max(2) - 1;
        (0..=m).map(|k| t_end * T::of_usize(k) / T::of_usize(m)).collect()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn fields(&self) -> &[Field<T>] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid<T>> {
        self.fields.first().map(|f| f.grid())
    }

    pub fn config(&self) -> Option<&SolverConfig<T>> {
        self.config.as_ref()
    }

    pub fn kind(&self) -> &EquationKind<T> {
        &self.kind
    }

    /// Coupling constant; zero for free trajectories.
    pub fn mu(&self) -> T {
        self.config.as_ref().map(|c| c.mu).unwrap_or_else(T::zero)
    }

    pub fn last(&self) -> Option<(T, &Field<T>)> {
        self.times.last().copied().zip(self.fields.last())
    }

    pub fn last_step(&self) -> usize {
        self.last_step
    }

    /// `e^{itΔ}v₀` at the stored times, for perturbation runs.
    pub fn free_part(&self) -> Option<Trajectory<T>> {
        match &self.kind {
            EquationKind::Perturbation { v0 } => Trajectory::free_evolution(v0, &self.times).ok(),
            _ => None,
        }
    }

    /// `v + w` for perturbation runs; a copy otherwise.
    pub fn full_solution(&self) -> Trajectory<T> {
        match self.free_part() {
            Some(v) => {
                let fields = self
                    .fields
                    .iter()
                    .zip(v.fields())
                    .map(|(w, v)| w.add(v).expect("same grid"))
                    .collect();
                Trajectory {
                    times: self.times.clone(),
                    fields,
                    config: self.config.clone(),
                    kind: EquationKind::Full,
                    last_step: self.last_step,
                }
            }
            None => self.clone(),
        }
    }

    /// Samples with `t ≤ t_max`.
    pub fn truncated(&self, t_max: T) -> Trajectory<T> {
        let keep = self.times.iter().take_while(|&&t| t <= t_max).count();
        Trajectory {
            times: self.times[..keep].to_vec(),
            fields: self.fields[..keep].to_vec(),
            config: self.config.clone(),
            kind: self.kind.clone(),
            last_step: self.last_step,
        }
    }

    /// Every `k`-th sample, always keeping the first.
    pub fn subsampled(&self, k: usize) -> Trajectory<T> {
        let k = k.max(1);
        let idx: Vec<usize> = (0..self.len()).step_by(k).collect();
        Trajectory {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            fields: idx.iter().map(|&i| self.fields[i].clone()).collect(),
            config: self.config.clone(),
            kind: self.kind.clone(),
            last_step: self.last_step,
        }
    }

    /// Time reversal `t ↦ −t` with conjugation, samples re-sorted increasing.
    pub fn reversed_conjugate(&self) -> Trajectory<T> {
        let times = self.times.iter().rev().map(|&t| -t).collect();
        let fields = self.fields.iter().rev().map(|f| f.conj()).collect();
        let kind = match &self.kind {
            EquationKind::Perturbation { v0 } => EquationKind::Perturbation { v0: v0.conj() },
            other => other.clone(),
        };
        Trajectory { times, fields, config: self.config.clone(), kind, last_step: self.last_step }
    }

    /// Applies `f` to every stored field.
    pub fn map_fields(&self, f: impl Fn(&Field<T>) -> Field<T>) -> Trajectory<T> {
        Trajectory {
            times: self.times.clone(),
            fields: self.fields.iter().map(f).collect(),
            config: self.config.clone(),
            kind: self.kind.clone(),
            last_step: self.last_step,
        }
    }

    /// Same samples reinterpreted as plain fields (drops the perturbation link).
    pub fn as_plain(&self) -> Trajectory<T> {
        Trajectory { kind: EquationKind::Free, ..self.clone() }
    }
}

/// `M(u) = ∫|u|² dx`.
pub fn mass<T: Real>(field: &Field<T>) -> T {
    field.norm_sq()
}

/// `E(u) = ∫ ½|∇u|² + (μ/4)|u|⁴ dx`; gradient term on the frequency side.
pub fn energy<T: Real>(field: &Field<T>, mu: T) -> T {
    let grid = field.grid();
    let spec = field.frequency();
    let kinetic = spec
        .values()
        .iter()
        .zip(grid.frequency_norm_sq())
        .map(|(z, &k2)| z.norm_sqr() * k2)
        .sum::<T>();
    let phys = field.physical();
    let quartic = phys.values().iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<T>();
    let cv = grid.cell_volume();
    cv * (T::of(0.5) * kinetic + mu * T::of(0.25) * quartic)
}

/// Energy with the gradient assembled in physical space; an independent path
/// to [`energy`] used as a cross-check.
pub fn energy_physical<T: Real>(field: &Field<T>, mu: T) -> T {
    let grid = field.grid();
    let grads = gradient(field);
    let phys = field.physical();
    let cv = grid.cell_volume();
    let mut kinetic = T::zero();
    for g in &grads {
        kinetic = kinetic + g.values().iter().map(|z| z.norm_sqr()).sum::<T>();
    }
    let quartic = phys.values().iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<T>();
    cv * (T::of(0.5) * kinetic + mu * T::of(0.25) * quartic)
}

pub fn evolve_full<T: Real>(u0: &Field<T>, config: &SolverConfig<T>) -> Result<Trajectory<T>> {
    u0.ensure_finite()?;
    run(u0, None, config, 0)
}

pub fn evolve_perturbation<T: Real>(
    w0: &Field<T>,
    v0: &Field<T>,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>> {
    w0.ensure_finite()?;
    v0.ensure_finite()?;
    if w0.grid() != v0.grid() {
        return Err(Error::GridMismatch);
    }
    run(w0, Some(v0), config, 0)
}

/// Continues a run whose state after `start_step` steps is `state`.
///
/// Pass the frequency-view state of a checkpoint to get bit-identical results.
pub fn evolve_from<T: Real>(
    state: &Field<T>,
    v0: Option<&Field<T>>,
    config: &SolverConfig<T>,
    start_step: usize,
) -> Result<Trajectory<T>> {
    state.ensure_finite()?;
    if let Some(v0) = v0 {
        if v0.grid() != state.grid() {
            return Err(Error::GridMismatch);
        }
    }
    run(state, v0, config, start_step)
}

struct Stepper<'a, T: Real> {
    grid: &'a Grid<T>,
    config: &'a SolverConfig<T>,
    linear: Vec<Complex<T>>,
    keep: Option<Vec<bool>>,
    v0_hat: Option<Vec<Complex<T>>>,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(grid: &'a Grid<T>, config: &'a SolverConfig<T>, v0: Option<&Field<T>>) -> Self {
        let tau = match config.scheme {
            Scheme::Strang => config.dt * T::of(0.5),
            Scheme::Lie => config.dt,
        };
        let linear = grid
            .frequency_norm_sq()
            .iter()
            .map(|&k2| Complex::from_polar(T::one(), -tau * k2))
            .collect();
        // A linear run has no products to dealias.
        let keep = (config.dealias && config.mu != T::zero()).then(|| (0..grid.len()).map(|i| grid.dealias_keeps(i)).collect());
        Self {
            grid,
            config,
            linear,
            keep,
            v0_hat: v0.map(|v| v.frequency().into_values()),
        }
    }

    fn apply_linear(&self, hat: &mut [Complex<T>]) {
        hat.par_iter_mut().zip(self.linear.par_iter()).for_each(|(z, m)| *z = *z * m);
    }

    fn apply_dealias(&self, hat: &mut [Complex<T>]) {
        if let Some(keep) = &self.keep {
            hat.par_iter_mut().zip(keep.par_iter()).for_each(|(z, &k)| {
                if !k {
                    *z = Complex::zero();
                }
            });
        }
    }

    /// Exact nonlinear flow over `tau` at time `t`; `phys` holds `w` (or `u`).
    fn apply_nonlinear(&self, phys: &mut [Complex<T>], t: T, tau: T) {
        let mu = self.config.mu;
        if mu == T::zero() {
            return;
        }
        let rotate = |u: Complex<T>| u * Complex::from_polar(T::one(), -mu * u.norm_sqr() * tau);
        match &self.v0_hat {
            None => phys.par_iter_mut().for_each(|w| *w = rotate(*w)),
            Some(v0_hat) => {
                let norm_sq = self.grid.frequency_norm_sq();
                let mut v: Vec<Complex<T>> = v0_hat
                    .par_iter()
                    .zip(norm_sq.par_iter())
                    .map(|(z, &k2)| *z * Complex::from_polar(T::one(), -t * k2))
                    .collect();
                self.grid.fft_inverse(&mut v);
                phys.par_iter_mut().zip(v.par_iter()).for_each(|(w, &v)| *w = rotate(*w + v) - v);
            }
        }
    }

    fn step(&self, hat: &mut Vec<Complex<T>>, step: usize) -> std::result::Result<(), ()> {
        let dt = self.config.dt;
        match self.config.scheme {
            Scheme::Strang => {
                self.apply_linear(hat);
                self.grid.fft_inverse(hat);
                let t_mid = (T::of_usize(step) + T::of(0.5)) * dt;
                self.apply_nonlinear(hat, t_mid, dt);
                finite(hat)?;
                self.grid.fft_forward(hat);
                self.apply_dealias(hat);
                self.apply_linear(hat);
            }
            Scheme::Lie => {
                self.grid.fft_inverse(hat);
                self.apply_nonlinear(hat, self.config.time_of(step), dt);
                finite(hat)?;
                self.grid.fft_forward(hat);
                self.apply_dealias(hat);
                self.apply_linear(hat);
            }
        }
        finite(hat)
    }
}

fn finite<T: Real>(values: &[Complex<T>]) -> std::result::Result<(), ()> {
    if values.par_iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(())
    }
}

fn run<T: Real>(
    initial: &Field<T>,
    v0: Option<&Field<T>>,
    config: &SolverConfig<T>,
    start_step: usize,
) -> Result<Trajectory<T>> {
    config.validate()?;
    let grid = initial.grid().clone();
    let nyq = grid.nyquist();
    if config.dt * nyq * nyq > T::PI() {
        log::warn!(
            "dt·ξ_max² = {} exceeds π; splitting error grows for the resolved top modes",
            config.dt * nyq * nyq
        );
    }
    let stepper = Stepper::new(&grid, config, v0);
    let total = config.steps();
    let mut hat = initial.frequency().into_values();
    let mut times = vec![config.time_of(start_step)];
    let mut fields = vec![Field::from_values(&grid, hat.clone(), View::Frequency)?];
    for step in start_step..total {
        if stepper.step(&mut hat, step).is_err() {
            return Err(Error::NumericalAbort { last_valid_time: config.time_of(step).as_f64() });
        }
        let done = step + 1;
        if done % config.save_stride == 0 || done == total {
            times.push(config.time_of(done));
            fields.push(Field::from_values(&grid, hat.clone(), View::Frequency)?);
        }
    }
    let kind = match v0 {
        Some(v0) => EquationKind::Perturbation { v0: v0.frequency() },
        None => EquationKind::Full,
    };
    let mut traj = Trajectory::new(times, fields, kind, Some(config.clone()))?;
    traj.last_step = total.max(start_step);
    Ok(traj)
}

/// Result of iterating the Duhamel map on sampled times.
#[derive(Clone, Debug)]
pub struct PicardOutcome<T: Real> {
    pub times: Vec<T>,
    /// Last computed iterate at every sample time.
    pub iterate: Vec<Field<T>>,
    /// `sup_t ‖w^{(j+1)}(t) − w^{(j)}(t)‖_{H^{1/2}}` per iteration.
    pub differences: Vec<T>,
    /// Set when the differences grew twice in a row.
    pub diverged: bool,
}

/// Fixed-point iteration of
/// `Φ(w)(t) = e^{itΔ}w₀ − iμ∫₀ᵗ e^{i(t−s)Δ}(|v + w|²(v + w))(s) ds`
/// on the sample times of `v` up to `interval_end`, with the time integral
/// taken by the composite trapezoid rule in the interaction picture.
pub fn picard_iterate<T: Real>(
    w0: &Field<T>,
    v: &Trajectory<T>,
    interval_end: T,
    iterations: usize,
    mu: T,
) -> Result<PicardOutcome<T>> {
    let v = v.truncated(interval_end);
    if v.len() < 2 {
        return Err(Error::arg("Picard iteration needs at least two samples of v"));
    }
    if v.times()[0] != T::zero() {
        return Err(Error::arg("samples of v must start at t = 0"));
    }
    if v.grid() != Some(w0.grid()) {
        return Err(Error::GridMismatch);
    }
    let times = v.times().to_vec();
    let w0_hat = w0.frequency();
    let v_phys: Vec<Field<T>> = v.fields().iter().map(|f| f.physical()).collect();
    let mut current: Vec<Field<T>> = times.iter().map(|&t| free_propagate(&w0_hat, t)).collect();
    let mut differences = Vec::new();
    let mut diverged = false;
    for _ in 0..iterations {
        // G(s) = e^{−isΔ}(|u|²u)(s)
        let g: Vec<Field<T>> = current
            .par_iter()
            .zip(v_phys.par_iter())
            .zip(times.par_iter())
            .map(|((w, v), &s)| {
                let w = w.physical();
                let vals = w
                    .values()
                    .iter()
                    .zip(v.values())
                    .map(|(&w, &v)| {
                        let u = w + v;
                        u * u.norm_sqr()
                    })
                    .collect();
                let f = Field::from_values(w.grid(), vals, View::Physical).expect("grid length");
                free_propagate(&f, -s)
            })
            .collect();
        let mut acc = Field::zeros(w0.grid(), View::Frequency);
        let mut next = Vec::with_capacity(times.len());
        let minus_i_mu = Complex::new(T::zero(), -mu);
        for i in 0..times.len() {
            if i > 0 {
                let h = (times[i] - times[i - 1]) * T::of(0.5);
                let c = Complex::from(h);
                acc = acc.lin_comb(Complex::from(T::one()), &g[i - 1], c)?;
                acc = acc.lin_comb(Complex::from(T::one()), &g[i], c)?;
            }
            let inter = w0_hat.lin_comb(Complex::from(T::one()), &acc, minus_i_mu)?;
            next.push(free_propagate(&inter, times[i]));
        }
        let diff = next
            .iter()
            .zip(&current)
            .map(|(a, b)| sobolev_norm(&a.sub(b).expect("same grid"), 0.5, false).unwrap_or(T::nan()))
            .fold(T::zero(), T::max);
        differences.push(diff);
        current = next;
        let k = differences.len();
        if k >= 3 && differences[k - 1] > differences[k - 2] && differences[k - 2] > differences[k - 3] {
            diverged = true;
            break;
        }
    }
    Ok(PicardOutcome { times, iterate: current, differences, diverged })
}

/// Sidecar written next to a checkpointed field.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub config: SolverConfig<f64>,
    pub time: f64,
    pub step: usize,
    pub kind: String,
    pub mass: f64,
    pub energy: f64,
}

/// Writes `<stem>.field` (final state, frequency view), `<stem>.json` and, for
/// perturbation runs, `<stem>.v0.field`.
pub fn write_checkpoint<T: Real>(traj: &Trajectory<T>, dir: &Path, stem: &str) -> Result<CheckpointMeta> {
    let config = traj.config().ok_or_else(|| Error::arg("only solver trajectories can be checkpointed"))?;
    let (time, field) = traj.last().ok_or_else(|| Error::arg("empty trajectory"))?;
    fs::create_dir_all(dir)?;
    io::save_field(dir.join(format!("{stem}.field")), &field.frequency(), time)?;
    if let EquationKind::Perturbation { v0 } = traj.kind() {
        io::save_field(dir.join(format!("{stem}.v0.field")), &v0.frequency(), T::zero())?;
    }
    let meta = CheckpointMeta {
        config: SolverConfig {
            dt: config.dt.as_f64(),
            t_end: config.t_end.as_f64(),
            mu: config.mu.as_f64(),
            dealias: config.dealias,
            save_stride: config.save_stride,
            scheme: config.scheme,
        },
        time: time.as_f64(),
        step: traj.last_step(),
        kind: traj.kind().label().to_string(),
        mass: mass(field).as_f64(),
        energy: energy(field, config.mu).as_f64(),
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

/// Resumes a checkpoint and runs to `config.t_end`. `config.dt` must match.
pub fn resume<T: Real>(dir: &Path, stem: &str, config: &SolverConfig<T>) -> Result<Trajectory<T>> {
    let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    if meta.config.dt != config.dt.as_f64() {
        return Err(Error::arg(format!(
            "checkpoint dt {} differs from requested dt {}",
            meta.config.dt, config.dt
        )));
    }
    let (state, _) = io::load_field::<T>(dir.join(format!("{stem}.field")))?;
    let v0 = if meta.kind == "perturbation" {
        Some(io::load_field::<T>(dir.join(format!("{stem}.v0.field")))?.0)
    } else {
        None
    };
    evolve_from(&state, v0.as_ref(), config, meta.step)
}
