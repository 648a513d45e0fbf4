//! Subcommand configurations and drivers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nls_core::norms::norm_report;
use nls_core::randomization::{tail_check, Ensemble, RandomizationPlan};
use nls_core::solver::{energy, evolve_full, evolve_perturbation, mass, write_checkpoint, Trajectory};
use nls_core::spectral::{dyadic_project, Derivative, DyadicMode, UnitPartition};
use nls_core::{morawetz, stats, Complex, Field, Grid};
use nls_lab::estimates::{
    almost_sure_strichartz_stats, bilinear_sweep, local_smoothing_sweep, radial_gaussian,
    radial_square_sobolev_ratio, strichartz_sweep, BilinearConfig, NormSpec, TimeWindow,
};
use nls_lab::experiments::{highlow_run, n0_sweep, scattering_diagnostic, HighLowSetup, ScatterConfig};
use nls_lab::sweep::fmt_float;
use nls_lab::{RatioSweep, SweepPoint};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::{field_hash, sha256_hex, RunDir};
use crate::config::{DataSpec, GridSpec, SeedRange, SolverSpec};
use crate::error::{CliError, Result};

/// Where a finished run landed and whether its checks held.
#[derive(Debug)]
pub struct Finished {
    pub dir: PathBuf,
    pub summary: Vec<String>,
    pub failures: Vec<String>,
}

impl Finished {
    fn new(dir: PathBuf) -> Self {
        Self { dir, summary: Vec::new(), failures: Vec::new() }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

fn input_hashes(data: &DataSpec, field: &Field<f64>) -> Result<BTreeMap<String, String>> {
    let mut inputs = BTreeMap::from([("data".to_string(), field_hash(field))]);
    if let Some(path) = data.source_file() {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        inputs.insert("data_file".to_string(), sha256_hex(&bytes));
    }
    Ok(inputs)
}

fn randomized(field: &Field<f64>, seed: Option<u64>) -> Result<Field<f64>> {
    Ok(match seed {
        Some(seed) => RandomizationPlan::new(field.grid(), seed)?.randomize(field)?,
        None => field.clone(),
    })
}

fn relative(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        x.abs()
    } else {
        (x / reference).abs()
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Write every saved field under `trajectory/`.
    pub write_trajectory: bool,
    /// Fail (exit 3) when the relative mass drift exceeds this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mass_drift: Option<f64>,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
}

/// Exact plane-wave solution `A e^{i(k·x − (|k|² + μA²)t)}`.
pub fn plane_wave_exact(grid: &Grid<f64>, mode: &[i64], amplitude: f64, mu: f64, t: f64) -> Field<f64> {
    let dk = grid.frequency_spacing();
    let k2: f64 = mode.iter().map(|&m| (m as f64 * dk).powi(2)).sum();
    let omega = k2 + mu * amplitude * amplitude;
    Field::plane_wave(grid, mode, Complex::from_polar(amplitude, -omega * t))
}

pub fn simulate(cfg: &SimulateConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let u0 = cfg.data.build(&grid)?;
    let solver = cfg.solver.build()?;
    let mut run = RunDir::create(root, "simulate", cfg, input_hashes(&cfg.data, &u0)?)?;
    let traj = evolve_full(&u0, &solver)?;

    let m0 = mass(&u0);
    let e0 = energy(&u0, solver.mu);
    let exact = match &cfg.data {
        DataSpec::PlaneWave { mode, amplitude } => Some((mode.clone(), *amplitude)),
        _ => None,
    };
    let mut csv = String::from("time,mass,energy,mass_drift,energy_drift");
    csv.push_str(if exact.is_some() { ",exact_error\n" } else { "\n" });
    let (mut mass_drift, mut energy_drift, mut exact_error) = (0f64, 0f64, 0f64);
    for (&t, u) in traj.times().iter().zip(traj.fields()) {
        let (m, e) = (mass(u), energy(u, solver.mu));
        let (dm, de) = (relative(m - m0, m0), relative(e - e0, e0));
        mass_drift = mass_drift.max(dm);
        energy_drift = energy_drift.max(de);
        write!(csv, "{},{},{},{},{}", fmt_float(t), fmt_float(m), fmt_float(e), fmt_float(dm), fmt_float(de)).unwrap();
        if let Some((mode, a)) = &exact {
            let err = u.distance(&plane_wave_exact(&grid, mode, *a, solver.mu, t))?;
            exact_error = exact_error.max(err);
            write!(csv, ",{}", fmt_float(err)).unwrap();
        }
        csv.push('\n');
    }
    run.write("conserved.csv", csv)?;
    if cfg.write_trajectory {
        for (i, (&t, u)) in traj.times().iter().zip(traj.fields()).enumerate() {
            run.write_field(&format!("trajectory/{i:06}.field"), u, t)?;
        }
    }
    write_checkpoint(&traj, &run.path().join("checkpoint"), "final")?;
    run.record("checkpoint/final.field");
    run.record("checkpoint/final.json");
    let mut summary = json!({
        "samples": traj.len(),
        "final_time": traj.times().last(),
        "max_mass_drift": mass_drift,
        "max_energy_drift": energy_drift,
    });
    if exact.is_some() {
        summary["max_exact_error"] = json!(exact_error);
    }
    run.write_json("summary.json", &summary)?;

    let mut done = Finished::new(run.finish()?);
    done.note(format!("samples {}  mass drift {mass_drift:.3e}  energy drift {energy_drift:.3e}", traj.len()));
    if exact.is_some() {
        done.note(format!("plane-wave L² error {exact_error:.3e}"));
    }
    if let Some(tol) = cfg.max_mass_drift {
        done.check(mass_drift <= tol, format!("mass drift {mass_drift:.3e} exceeds {tol:.3e}"));
    }
    Ok(done)
}

// ----------------------------------------------------------------- perturb

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbConfig {
    /// Split `f = P_{≤N0} f + P_{≥N0} f` into `w₀ + v₀`.
    pub n0: u64,
    /// Randomize the data first when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fail when `‖(v + w) − u‖_{L²}` exceeds this at any saved time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_reconstruction_error: Option<f64>,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            n0: 4,
            seed: None,
            max_reconstruction_error: None,
            grid: GridSpec::default(),
            data: DataSpec::default(),
            solver: SolverSpec::default(),
        }
    }
}

pub fn perturb(cfg: &PerturbConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let data = cfg.data.build(&grid)?;
    let solver = cfg.solver.build()?;
    let mut run = RunDir::create(root, "perturb", cfg, input_hashes(&cfg.data, &data)?)?;
    let f = randomized(&data, cfg.seed)?;
    let w0 = dyadic_project(&f, cfg.n0, DyadicMode::Leq)?.field;
    let v0 = f.sub(&w0)?;
    let w = evolve_perturbation(&w0, &v0, &solver)?;
    let u = evolve_full(&f, &solver)?;
    let sum = w.full_solution();

    let mut csv = String::from("time,mass_w,energy_w,mass_u,reconstruction_error\n");
    let mut worst = 0f64;
    for i in 0..w.len() {
        let err = sum.fields()[i].distance(&u.fields()[i])?;
        worst = worst.max(err);
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_float(w.times()[i]),
            fmt_float(mass(&w.fields()[i])),
            fmt_float(energy(&w.fields()[i], solver.mu)),
            fmt_float(mass(&u.fields()[i])),
            fmt_float(err)
        )
        .unwrap();
    }
    run.write("perturbation.csv", csv)?;
    write_checkpoint(&w, &run.path().join("checkpoint"), "w")?;
    for name in ["checkpoint/w.field", "checkpoint/w.v0.field", "checkpoint/w.json"] {
        run.record(name);
    }
    let overlap = v0.inner(&w0)?.norm();
    run.write_json(
        "summary.json",
        &json!({ "overlap": overlap, "max_reconstruction_error": worst, "mass_f": mass(&f) }),
    )?;

    let mut done = Finished::new(run.finish()?);
    done.note(format!("|⟨v₀, w₀⟩| {overlap:.3e}  max ‖(v + w) − u‖ {worst:.3e}"));
    if let Some(tol) = cfg.max_reconstruction_error {
        done.check(worst <= tol, format!("reconstruction error {worst:.3e} exceeds {tol:.3e}"));
    }
    Ok(done)
}

// --------------------------------------------------------------- randomize

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomizeConfig {
    /// Allowed `|mean − target| / σ_MC` for the second-moment identity.
    pub sigma_bound: f64,
    /// Gaussian-sum samples for the tail check; 0 skips it.
    pub tail_samples: usize,
    pub seeds: SeedRange,
    pub grid: GridSpec,
    pub data: DataSpec,
}

impl Default for RandomizeConfig {
    fn default() -> Self {
        Self {
            sigma_bound: 4.0,
            tail_samples: 0,
            seeds: SeedRange { first: 0, count: 1000 },
            grid: GridSpec { dim: 2, n: 32, length: std::f64::consts::TAU },
            data: DataSpec::default(),
        }
    }
}

pub fn randomize(cfg: &RandomizeConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let f = cfg.data.build(&grid)?;
    let mut run = RunDir::create(root, "randomize", cfg, input_hashes(&cfg.data, &f)?)?;
    let partition = UnitPartition::new(&grid)?;
    let ensemble = Ensemble::consecutive(f.clone(), cfg.seeds.first, cfg.seeds.count)?;
    let norms = ensemble.map(&partition, |_, fw| Ok(fw.norm_sq()))?;
    let target = partition.cube_energy_sum(&f)?;
    let mean = stats::mean(&norms);
    let sigma_mc = stats::std_error(&norms);
    let z = if sigma_mc > 0.0 { (mean - target) / sigma_mc } else { 0.0 };

    let mut csv = String::from("seed,norm_sq\n");
    for (seed, v) in ensemble.seeds().iter().zip(&norms) {
        writeln!(csv, "{seed},{}", fmt_float(*v)).unwrap();
    }
    run.write("ensemble.csv", csv)?;
    let first = RandomizationPlan::from_partition(partition.clone(), cfg.seeds.first, 1.0).randomize(&f)?;
    run.write_field("first_realization.field", &first, 0.0)?;

    let mut summary = json!({
        "seeds": cfg.seeds.count,
        "mean_norm_sq": mean,
        "target": target,
        "sigma_mc": sigma_mc,
        "z": z,
    });
    let mut tail_slope = None;
    if cfg.tail_samples > 0 {
        let spectrum = f.frequency();
        let coefficients: Vec<Complex<f64>> = partition
            .active_cubes(&f)?
            .into_iter()
            .map(|slot| Complex::new(partition.cube_piece(&spectrum, slot).l2_norm(), 0.0))
            .collect();
        let sigma = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / 2f64.sqrt();
        let lambdas: Vec<f64> = (0..=12).map(|i| sigma * (1.0 + 0.25 * i as f64)).collect();
        let tail = tail_check(&coefficients, cfg.seeds.first, cfg.tail_samples, &lambdas)?;
        run.write("tail.csv", tail.to_csv())?;
        summary["tail"] = serde_json::to_value(&tail).map_err(|e| CliError::config(e.to_string()))?;
        tail_slope = Some((tail.quadratic_fit.slope, tail.quadratic_fit.r_squared));
    }
    run.write_json("summary.json", &summary)?;

    let mut done = Finished::new(run.finish()?);
    done.note(format!("mean ‖f^ω‖² {mean:.6e}  Σ‖□_k f‖² {target:.6e}  z {z:+.3}"));
    done.check(
        z.abs() <= cfg.sigma_bound,
        format!("second moment off by {z:.2}σ (bound {})", cfg.sigma_bound),
    );
    if let Some((slope, r2)) = tail_slope {
        done.note(format!("tail slope {slope:.4}  R² {r2:.4}"));
        done.check(slope < 0.0, format!("tail slope {slope} is not negative"));
    }
    Ok(done)
}

// ------------------------------------------------------------------- norms

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsConfig {
    pub names: Vec<String>,
    pub s: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: GridSpec,
    pub data: DataSpec,
}

impl Default for NormsConfig {
    fn default() -> Self {
        Self {
            names: ["y", "z", "y_tilde", "x_proxy"].map(String::from).to_vec(),
            s: 0.5,
            epsilon: nls_core::norms::DEFAULT_EPSILON,
            t_end: 1.0,
            samples: 17,
            seed: None,
            grid: GridSpec::default(),
            data: DataSpec::default(),
        }
    }
}

pub fn norms(cfg: &NormsConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let data = cfg.data.build(&grid)?;
    if cfg.samples < 2 || !(cfg.t_end > 0.0) {
        return Err(CliError::config("norms need t_end > 0 and at least two samples"));
    }
    let mut run = RunDir::create(root, "norms", cfg, input_hashes(&cfg.data, &data)?)?;
    let f = randomized(&data, cfg.seed)?;
    let traj = Trajectory::free_evolution(&f, &Trajectory::uniform_times(cfg.t_end, cfg.samples))?;
    let names: Vec<&str> = cfg.names.iter().map(String::as_str).collect();
    let report = norm_report(&traj, &names, cfg.s, cfg.epsilon)?;
    run.write_json("norms.json", &report)?;
    let mut done = Finished::new(run.finish()?);
    for (name, norm) in &report {
        done.note(format!("{name}: {:.6e}", norm.value));
    }
    Ok(done)
}

// ---------------------------------------------------------------- morawetz

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorawetzConfig {
    /// Evolve `w` with `v = e^{itΔ}P_{≥N0} f` when set; otherwise the full equation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
}

pub fn morawetz(cfg: &MorawetzConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let data = cfg.data.build(&grid)?;
    let solver = cfg.solver.build()?;
    let mut run = RunDir::create(root, "morawetz", cfg, input_hashes(&cfg.data, &data)?)?;
    let f = randomized(&data, cfg.seed)?;
    let report = match cfg.n0 {
        Some(n0) => {
            let w0 = dyadic_project(&f, n0, DyadicMode::Leq)?.field;
            let v0 = f.sub(&w0)?;
            let w = evolve_perturbation(&w0, &v0, &solver)?;
            let v = w.free_part().expect("perturbation trajectory");
            morawetz::morawetz_report(&w.as_plain(), Some(&v), solver.mu, solver.dealias)?
        }
        None => morawetz::morawetz_report(&evolve_full(&f, &solver)?, None, solver.mu, solver.dealias)?,
    };
    let mut csv = String::from("time,M,dM_dt,dM_dt_flow\n");
    for i in 0..report.times.len() {
        writeln!(
            csv,
            "{},{},{},{}",
            fmt_float(report.times[i]),
            fmt_float(report.m[i]),
            fmt_float(report.dm_dt[i]),
            fmt_float(report.dm_dt_flow[i])
        )
        .unwrap();
    }
    run.write("morawetz.csv", csv)?;
    run.write_json("morawetz.json", &report)?;
    let mut done = Finished::new(run.finish()?);
    let ftc = &report.residuals.ftc;
    done.note(format!("‖w‖⁴_L⁴ {:.6e}  RHS {:.6e}  ratio {:.4}", report.lhs_l4, report.rhs_terms.total, report.ratio));
    done.note(format!("FTC defect {:.3e} (tolerance {:.3e})", ftc.defect, ftc.tolerance));
    done.check(ftc.passed, format!("FTC defect {:.3e} exceeds {:.3e}", ftc.defect, ftc.tolerance));
    Ok(done)
}

// -------------------------------------------------------------- inequality

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimateSpec {
    /// Rescaled Gaussians at frequency `N`, horizon `t_unit/N²`.
    Strichartz { blocks: Vec<u64>, q: f64, r: f64, t_unit: f64, samples: usize },
    Bilinear { m: u64, ns: Vec<u64>, seeds: SeedRange, q: f64, r: f64, time_samples: usize, conjugate: bool },
    /// Modulated packets at carrier `N`; sup over ball radii.
    Smoothing { frequencies: Vec<u64>, radii: Vec<f64>, width: f64, samples: usize },
    /// Radial Gaussians `exp(−|ξ|²/2λ²)`; three-dimensional grids only.
    Radial { lambdas: Vec<f64>, r: f64, epsilon: f64 },
    /// Distribution of `‖⟨∇⟩^s e^{itΔ}f^ω‖_{L^qL^r}` over seeds.
    AlmostSure { data: DataSpec, seeds: SeedRange, s: f64, q: f64, r: f64, t_end: f64, samples: usize, dyadic: bool },
}

impl Default for EstimateSpec {
    fn default() -> Self {
        EstimateSpec::Strichartz { blocks: vec![2, 4, 8], q: 4.0, r: 4.0, t_unit: 1.0, samples: 33 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalityConfig {
    /// Fail when the fitted log-log slope exceeds this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
    pub grid: GridSpec,
    pub estimate: EstimateSpec,
}

impl Default for InequalityConfig {
    fn default() -> Self {
        Self { max_slope: None, grid: GridSpec { dim: 2, n: 64, length: std::f64::consts::TAU }, estimate: Default::default() }
    }
}

fn write_sweep(run: &mut RunDir, done_notes: &mut Vec<String>, sweep: &RatioSweep, axis: &str) -> Result<Option<f64>> {
    run.write("sweep.csv", sweep.to_csv())?;
    run.write_json("fit.json", &sweep.fit_summary())?;
    let slope = sweep.slope(axis);
    if let Some(fit) = sweep.fits.get(axis) {
        done_notes.push(format!("{}: slope in {axis} {:.4}  R² {:.4}", sweep.name, fit.slope, fit.r_squared));
    }
    Ok(slope)
}

pub fn inequality(cfg: &InequalityConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let mut inputs = BTreeMap::new();
    let mut as_data = None;
    if let EstimateSpec::AlmostSure { data, .. } = &cfg.estimate {
        let f = data.build(&grid)?;
        inputs = input_hashes(data, &f)?;
        as_data = Some(f);
    }
    let mut run = RunDir::create(root, "inequality", cfg, inputs)?;
    let mut notes = Vec::new();
    let slope = match &cfg.estimate {
        EstimateSpec::Strichartz { blocks, q, r, t_unit, samples } => {
            let sweep = strichartz_sweep(&grid, blocks, *q, *r, *t_unit, *samples)?;
            write_sweep(&mut run, &mut notes, &sweep, "N")?
        }
        EstimateSpec::Bilinear { m, ns, seeds, q, r, time_samples, conjugate } => {
            let bc = BilinearConfig { q: *q, r: *r, time_samples: *time_samples, conjugate: *conjugate, horizon: None };
            let (sweep, points) = bilinear_sweep(&grid, *m, ns, &seeds.seeds(), &bc)?;
            let summary: Vec<_> = points
                .iter()
                .map(|p| json!({ "n": p.n, "m": p.m, "horizon": p.horizon, "median": p.median(), "dispersion": p.dispersion() }))
                .collect();
            run.write_json("points.json", &summary)?;
            write_sweep(&mut run, &mut notes, &sweep, "N")?
        }
        EstimateSpec::Smoothing { frequencies, radii, width, samples } => {
            let sweep = local_smoothing_sweep(&grid, frequencies, radii, *width, *samples)?;
            write_sweep(&mut run, &mut notes, &sweep, "N")?
        }
        EstimateSpec::Radial { lambdas, r, epsilon } => {
            let points = lambdas
                .iter()
                .map(|&lambda| {
                    let rs = radial_square_sobolev_ratio(&radial_gaussian(&grid, lambda), *r, *epsilon)?;
                    Ok(SweepPoint::new([("lambda", lambda)], rs.lhs, rs.rhs)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sweep = RatioSweep::new("radial_square_sobolev", points);
            if lambdas.len() >= 2 {
                sweep.fit_axis("lambda")?;
            }
            write_sweep(&mut run, &mut notes, &sweep, "lambda")?
        }
        EstimateSpec::AlmostSure { seeds, s, q, r, t_end, samples, dyadic, .. } => {
            let spec = NormSpec {
                derivative: Derivative::Inhomogeneous(*s),
                q: *q,
                r: *r,
                window: TimeWindow::new(*t_end, *samples),
                dyadic: *dyadic,
            };
            let f = as_data.as_ref().expect("built above");
            let st = almost_sure_strichartz_stats(f, &seeds.seeds(), &spec)?;
            let mut csv = String::from("seed,value\n");
            for (seed, v) in st.seeds.iter().zip(&st.values) {
                writeln!(csv, "{seed},{}", fmt_float(*v)).unwrap();
            }
            run.write("values.csv", csv)?;
            run.write_json("stats.json", &st)?;
            notes.push(format!(
                "median {:.6e} ± {:.2e}  moment(8)/moment(2) {:.4}",
                st.median, st.median_se, st.moment_ratio
            ));
            None
        }
    };
    let mut done = Finished::new(run.finish()?);
    done.summary = notes;
    if let (Some(bound), Some(slope)) = (cfg.max_slope, slope) {
        done.check(slope <= bound, format!("fitted slope {slope:.4} exceeds {bound}"));
    }
    Ok(done)
}

// ----------------------------------------------------------------- highlow

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HighLowConfig {
    pub s: f64,
    pub n0: u64,
    pub seed: u64,
    pub growth_threshold: f64,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
}

impl Default for HighLowConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            n0: 4,
            seed: 0,
            growth_threshold: 2.0,
            grid: GridSpec { dim: 2, n: 64, length: std::f64::consts::TAU },
            data: DataSpec::PowerLaw { s: 0.5, epsilon: 0.05, amplitude: 0.2, radius: None, radial: false, phase_seed: 0 },
            solver: SolverSpec { dt: 2e-3, t_end: 0.1, ..SolverSpec::default() },
        }
    }
}

pub fn highlow(cfg: &HighLowConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let data = cfg.data.build(&grid)?;
    let solver = cfg.solver.build()?;
    let mut setup = HighLowSetup::new(data.clone(), cfg.s, cfg.n0, cfg.seed, solver);
    setup.growth_threshold = cfg.growth_threshold;
    setup.validate()?;
    let mut run = RunDir::create(root, "highlow", cfg, input_hashes(&cfg.data, &data)?)?;
    let out = highlow_run(&setup)?;
    run.write("energy.csv", out.track.to_csv())?;
    run.write_json(
        "summary.json",
        &json!({
            "horizon": out.horizon,
            "overlap": out.overlap,
            "normalization": setup.normalization(),
            "max_ratio": out.track.max_ratio,
            "growth": out.track.growth,
            "flagged": out.track.flagged,
        }),
    )?;
    let mut done = Finished::new(run.finish()?);
    done.note(format!(
        "horizon {:.4}  growth {:.4}  |⟨v₀, w₀⟩| {:.3e}",
        out.horizon, out.track.growth, out.overlap
    ));
    done.check(
        !out.track.flagged,
        format!("normalized energy grew by {:.3} > {}", out.track.growth, cfg.growth_threshold),
    );
    Ok(done)
}

// ------------------------------------------------------------------- sweep

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub s: f64,
    pub n0s: Vec<u64>,
    pub seeds: SeedRange,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let hl = HighLowConfig::default();
        Self { s: hl.s, n0s: vec![4, 8, 16], seeds: SeedRange { first: 0, count: 3 }, grid: hl.grid, data: hl.data, solver: hl.solver }
    }
}

pub fn sweep(cfg: &SweepConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let data = cfg.data.build(&grid)?;
    let solver = cfg.solver.build()?;
    let mut run = RunDir::create(root, "sweep", cfg, input_hashes(&cfg.data, &data)?)?;
    let fit = n0_sweep(&data, cfg.s, &cfg.n0s, &cfg.seeds.seeds(), &solver)?;
    run.write("sweep.csv", fit.to_csv())?;
    run.write_json("fit.json", &fit)?;
    let mut done = Finished::new(run.finish()?);
    done.note(format!(
        "slope {:.4} (initial data {:.4})  predicted {:.4}  bound {:.4}",
        fit.fit.slope, fit.initial_fit.slope, fit.predicted, fit.bound
    ));
    done.check(fit.passed, format!("slope {:.4} exceeds {:.4}", fit.fit.slope, fit.bound));
    Ok(done)
}

// ----------------------------------------------------------------- scatter

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterCommandConfig {
    /// Analyse `w` of the high-low split at this cutoff; otherwise the full solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fail unless the tail distance is non-increasing.
    pub require_decay: bool,
    pub scatter: ScatterConfig,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub solver: SolverSpec,
}

impl Default for ScatterCommandConfig {
    fn default() -> Self {
        Self {
            n0: None,
            seed: None,
            require_decay: true,
            scatter: ScatterConfig::default(),
            grid: GridSpec::default(),
            data: DataSpec::Gaussian { width: 0.5, amplitude: 0.1 },
            solver: SolverSpec { dt: 1e-3, t_end: 1.0, save_stride: 100, ..SolverSpec::default() },
        }
    }
}

pub fn scatter(cfg: &ScatterCommandConfig, root: &Path) -> Result<Finished> {
    let grid = cfg.grid.build()?;
    let data = cfg.data.build(&grid)?;
    let solver = cfg.solver.build()?;
    let mut run = RunDir::create(root, "scatter", cfg, input_hashes(&cfg.data, &data)?)?;
    let f = randomized(&data, cfg.seed)?;
    let traj = match cfg.n0 {
        Some(n0) => {
            let w0 = dyadic_project(&f, n0, DyadicMode::Leq)?.field;
            evolve_perturbation(&w0, &f.sub(&w0)?, &solver)?.as_plain()
        }
        None => evolve_full(&f, &solver)?,
    };
    let cm = scattering_diagnostic(&traj, &cfg.scatter)?;
    let mut csv = String::from("t_i");
    for t in &cm.times {
        write!(csv, ",{}", fmt_float(*t)).unwrap();
    }
    csv.push('\n');
    for (t, row) in cm.times.iter().zip(&cm.d) {
        csv.push_str(&fmt_float(*t));
        for v in row {
            write!(csv, ",{}", fmt_float(*v)).unwrap();
        }
        csv.push('\n');
    }
    run.write("cauchy.csv", csv)?;
    run.write_json(
        "trend.json",
        &json!({ "tail": cm.tail, "trend": cm.trend, "non_increasing": cm.non_increasing, "max_entry": cm.max_entry() }),
    )?;
    let mut done = Finished::new(run.finish()?);
    done.note(format!(
        "max D {:.3e}  Mann-Kendall τ {:+.3}  non-increasing {}",
        cm.max_entry(),
        cm.trend.tau,
        cm.non_increasing
    ));
    if cfg.require_decay {
        done.check(cm.non_increasing, format!("tail distance trend τ = {:.3} is increasing", cm.trend.tau));
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_plane_wave_at_time_zero_is_the_data() {
        let g = Grid::new(1, 16, std::f64::consts::TAU).unwrap();
        let a = plane_wave_exact(&g, &[2], 0.5, 1.0, 0.0);
        let b = Field::plane_wave(&g, &[2], Complex::new(0.5, 0.0));
        assert_eq!(a.max_abs_diff(&b).unwrap(), 0.0);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        fn check<C: Default + Serialize + serde::de::DeserializeOwned + PartialEq + std::fmt::Debug>() {
            let text = toml::to_string(&C::default()).unwrap();
            assert_eq!(toml::from_str::<C>(&text).unwrap(), C::default(), "{text}");
        }
        check::<SimulateConfig>();
        check::<PerturbConfig>();
        check::<RandomizeConfig>();
        check::<NormsConfig>();
        check::<MorawetzConfig>();
        check::<InequalityConfig>();
        check::<HighLowConfig>();
        check::<SweepConfig>();
        check::<ScatterCommandConfig>();
    }
}
