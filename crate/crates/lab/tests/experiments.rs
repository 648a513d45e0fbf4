use std::f64::consts::TAU;

use nls_core::randomization::{synthesize_data, Profile, RandomizationPlan};
use nls_core::solver::{energy, energy_physical, evolve_full, SolverConfig, Trajectory};
use nls_core::spectral::cutoff::lp_cutoff;
use nls_core::{Complex, Field, Grid};
use nls_lab::experiments::*;

fn power_law(grid: &Grid<f64>, s: f64, amplitude: f64) -> Field<f64> {
    synthesize_data(grid, s, 0.05, Profile::PowerLaw, false, 17).unwrap().scaled(Complex::new(amplitude, 0.0))
}

fn setup(data: Field<f64>, n0: u64, config: SolverConfig<f64>) -> HighLowSetup<f64> {
    HighLowSetup::new(data, 0.5, n0, 5, config)
}

#[test]
fn setup_rejects_bad_cutoffs() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let cfg = SolverConfig::new(1e-3, 0.01);
    let f = power_law(&g, 0.5, 1.0);
    assert!(setup(f.clone(), 6, cfg.clone()).validate().is_err());
    assert!(setup(f.clone(), 16, cfg.clone()).validate().is_err());
    assert!(setup(f, 8, cfg).validate().is_ok());
}

#[test]
fn horizon_is_capped_by_recurrence() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let s = setup(power_law(&g, 0.5, 1.0), 4, SolverConfig::new(1e-2, 100.0));
    assert!((s.horizon() - 0.5 * TAU * TAU / TAU).abs() < 1e-12);
}

#[test]
fn high_piece_vanishes_below_the_cutoff_and_overlap_is_reported() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let s = setup(power_law(&g, 0.5, 1.0), 8, SolverConfig::new(1e-3, 0.01));
    let parts = s.decomposition().unwrap();
    let v0 = parts.v0.frequency();
    for (z, &k2) in v0.values().iter().zip(g.frequency_norm_sq()) {
        if k2.sqrt() <= 4.0 {
            assert_eq!(z.norm(), 0.0);
        }
    }
    let bound = parts.v0.l2_norm() * parts.w0.l2_norm();
    assert!(parts.overlap > 0.0 && parts.overlap < 0.5 * bound, "{} vs {bound}", parts.overlap);
    let sum = parts.w0.add(&parts.v0).unwrap();
    assert!(sum.max_abs_diff(&parts.f_omega).unwrap() < 1e-13 * parts.f_omega.max_abs().max(1.0));
}

#[test]
fn initial_energy_matches_independent_quadrature() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let data = power_law(&g, 0.5, 3.0);
    let s = setup(data.clone(), 8, SolverConfig::new(1e-3, 0.002));
    let run = highlow_run(&s).unwrap();
    let f_omega = RandomizationPlan::new(&g, 5).unwrap().randomize(&data).unwrap();
    let k2 = g.frequency_norm_sq();
    let w0 = f_omega.multiplied_real(|i| lp_cutoff(k2[i].sqrt() / 8.0));
    let oracle = energy_physical(&w0, 1.0);
    assert!((run.track.energy[0] - oracle).abs() <= 1e-10 * oracle);
    assert!((run.track.ratio[0] - oracle / 8.0).abs() <= 1e-10 * oracle);
}

#[test]
fn cutoff_above_the_spectrum_reduces_to_the_full_equation() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let data = synthesize_data(&g, 0.5, 0.05, Profile::CompactBump { radius: 2.0 }, false, 4).unwrap();
    let data = data.scaled(Complex::new(2.0 / data.physical().max_abs(), 0.0));
    let cfg = SolverConfig::new(1e-3, 0.1).with_stride(10);
    let s = setup(data.clone(), 8, cfg.clone());
    let parts = s.decomposition().unwrap();
    assert_eq!(parts.v0.max_abs(), 0.0);
    let run = highlow_run(&s).unwrap();
    let full = evolve_full(&parts.f_omega, &cfg).unwrap();
    for (w, u) in run.trajectory.fields().iter().zip(full.fields()) {
        assert!(w.max_abs_diff(u).unwrap() < 1e-12);
    }
    assert!(run.track.growth - 1.0 < 1e-6, "{}", run.track.growth);
}

#[test]
fn linear_control_run_is_flat() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let s = setup(power_law(&g, 0.5, 3.0), 8, SolverConfig::new(1e-3, 0.05).with_mu(0.0).with_stride(5));
    let run = highlow_run(&s).unwrap();
    let r0 = run.track.ratio[0];
    assert!(run.track.ratio.iter().all(|r| (r - r0).abs() <= 1e-12 * r0));
    assert!(!run.track.flagged);
}

#[test]
fn defocusing_run_keeps_normalized_energy_below_twice_initial() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let s = setup(power_law(&g, 0.5, 3.0), 8, SolverConfig::new(1e-3, 0.2).with_stride(10));
    let run = highlow_run(&s).unwrap();
    assert!(run.track.energy.iter().all(|&e| e >= 0.0));
    assert!(run.track.growth <= 2.0 && !run.track.flagged, "{}", run.track.growth);
    assert!(run.track.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn decomposition_reconstructs_the_full_evolution() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let data = power_law(&g, 0.5, 3.0);
    let run_at = |dt: f64| {
        let cfg = SolverConfig::new(dt, 0.05).with_dealias(false).with_stride((0.01 / dt).round() as usize);
        let s = setup(data.clone(), 8, cfg.clone());
        let run = highlow_run(&s).unwrap();
        let full = evolve_full(&s.decomposition().unwrap().f_omega, &cfg).unwrap();
        (run.trajectory.full_solution(), full)
    };
    let (hl, full) = run_at(1e-3);
    let (_, fine) = run_at(5e-4);
    let self_err = full.last().unwrap().1.distance(fine.last().unwrap().1).unwrap();
    for (a, b) in hl.fields().iter().zip(full.fields()) {
        assert!(a.distance(b).unwrap() <= 10.0 * self_err.max(1e-14));
    }
}

#[test]
fn sweep_needs_several_cutoffs_and_seeds() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let f = power_law(&g, 0.5, 1.0);
    let cfg = SolverConfig::new(1e-3, 0.002);
    assert!(n0_sweep(&f, 0.5, &[4], &[1, 2, 3], &cfg).is_err());
    assert!(n0_sweep(&f, 0.5, &[2, 4, 4], &[1, 2, 3], &cfg).is_err());
    assert!(n0_sweep(&f, 0.5, &[2, 4, 8], &[1, 2], &cfg).is_err());
}

#[test]
fn linear_sweep_slope_equals_initial_slope() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let f = power_law(&g, 0.5, 1.0);
    let cfg = SolverConfig::new(1e-3, 0.01).with_mu(0.0);
    let fit = n0_sweep(&f, 0.5, &[2, 4, 8], &[1, 2, 3], &cfg).unwrap();
    for c in &fit.cells {
        assert!((c.sup_energy - c.initial_energy).abs() <= 1e-12 * c.initial_energy);
    }
    assert!((fit.fit.slope - fit.initial_fit.slope).abs() < 1e-10);
}

#[test]
fn sweep_reports_exponent_and_reference_line() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let f = power_law(&g, 0.5, 2.0);
    let cfg = SolverConfig::new(2e-3, 0.02).with_stride(5);
    let fit = n0_sweep(&f, 0.5, &[4, 8, 16], &[1, 2, 3], &cfg).unwrap();
    assert_eq!(fit.predicted, 1.0);
    assert!(fit.passed && fit.fit.slope <= fit.bound, "{:?}", fit.fit);
    let csv = fit.to_csv();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    // reference column follows N0^{2(1−s)} exactly
    let slope = (rows[8][5] / rows[0][5]).ln() / (rows[8][0] / rows[0][0]).ln();
    assert!((slope - 1.0).abs() < 1e-12);
}

#[test]
fn exponent_for_the_lower_regularity_threshold() {
    let s = 3.0 / 7.0 + 0.01;
    let p = predicted_exponent(s);
    assert!((p - 2.0 * (4.0 / 7.0 - 0.01)).abs() < 1e-15);
    assert!((p - 1.126).abs() < 5e-3);
}

fn gaussian(grid: &Grid<f64>, amplitude: f64) -> Field<f64> {
    let c = grid.box_length() / 2.0;
    Field::from_fn(grid, |x| {
        let r2 = (x[0] - c).powi(2) + (x[1] - c).powi(2);
        Complex::new(amplitude * (-r2).exp(), 0.0)
    })
}

#[test]
fn scattering_matrix_vanishes_for_linear_runs() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let s = setup(power_law(&g, 0.5, 3.0), 8, SolverConfig::new(1e-3, 0.1).with_mu(0.0).with_stride(10));
    let run = highlow_run(&s).unwrap();
    let m = scattering_diagnostic(&run.trajectory, &ScatterConfig::default()).unwrap();
    assert!(m.max_entry() <= 1e-10, "{}", m.max_entry());
}

#[test]
fn scattering_guards_samples_and_window() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let short = Trajectory::free_evolution(&gaussian(&g, 1.0), &[0.0, 0.1]).unwrap();
    assert!(scattering_diagnostic(&short, &ScatterConfig::default()).is_err());
    let long = Trajectory::free_evolution(&gaussian(&g, 1.0), &[0.0, 1.0, 4.0]).unwrap();
    assert!(scattering_diagnostic(&long, &ScatterConfig::default()).is_err());
}

#[test]
fn scattering_distance_is_cubic_in_amplitude() {
    let g = Grid::new(2, 64, TAU).unwrap();
    // the 2/3 filter trims the box-edge kink of the Gaussian, a term linear in c
    let cfg = SolverConfig::new(1e-3, 0.2).with_stride(50).with_dealias(false);
    let d_of = |c: f64| {
        let traj = evolve_full(&gaussian(&g, c), &cfg).unwrap();
        let m = scattering_diagnostic(&traj, &ScatterConfig::default()).unwrap();
        m.d[0][m.d.len() - 1]
    };
    let (small, double) = (d_of(0.01), d_of(0.02));
    assert!((double / small - 8.0).abs() < 0.02 * 8.0, "{}", double / small);
}

#[test]
fn reversed_trajectory_reverses_the_matrix() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let traj = evolve_full(&gaussian(&g, 1.0), &SolverConfig::new(1e-3, 0.1).with_stride(20)).unwrap();
    let a = scattering_diagnostic(&traj, &ScatterConfig::default()).unwrap();
    let b = scattering_diagnostic(&traj.reversed_conjugate(), &ScatterConfig::default()).unwrap();
    let n = a.d.len();
    for i in 0..n {
        for j in 0..n {
            assert!((a.d[i][j] - b.d[n - 1 - i][n - 1 - j]).abs() <= 1e-12 * a.max_entry());
        }
    }
}

#[test]
fn defocusing_small_amplitude_distance_does_not_increase() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let traj = evolve_full(&gaussian(&g, 0.5), &SolverConfig::new(1e-3, 0.3).with_stride(20)).unwrap();
    let m = scattering_diagnostic(&traj, &ScatterConfig::default()).unwrap();
    assert!(m.non_increasing, "{:?} {:?}", m.trend, m.tail);
    assert!(m.max_entry() > 0.0);
}

#[test]
fn initial_energy_uses_the_solver_energy() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let s = setup(power_law(&g, 0.5, 1.0), 4, SolverConfig::new(1e-3, 0.002));
    let run = highlow_run(&s).unwrap();
    let w0 = &run.trajectory.fields()[0];
    assert_eq!(run.track.energy[0], energy(w0, 1.0));
}
