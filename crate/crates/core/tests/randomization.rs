mod common;

use common::{band_limited, rel};
use nls_core::norms::sobolev_norm;
use nls_core::randomization::{
    omega_set_probe, synthesize_data, tail_check, Ensemble, OmegaProbeConfig, Profile, RandomizationPlan,
};
use nls_core::spectral::{fractional_derivative, Derivative, UnitPartition};
use nls_core::{stats, Complex, Field, Grid, View};
use std::f64::consts::TAU;

fn base_field() -> Field<f64> {
    let g = Grid::new(2, 32, TAU).unwrap();
    synthesize_data(&g, 0.3, 0.5, Profile::CompactBump { radius: 6.0 }, false, 17).unwrap()
}

#[test]
fn randomization_is_deterministic_and_linear() {
    let f = base_field();
    let g = band_limited(f.grid(), 4, 4);
    let plan = RandomizationPlan::new(f.grid(), 99).unwrap();
    let a = plan.randomize(&f).unwrap();
    let b = RandomizationPlan::new(f.grid(), 99).unwrap().randomize(&f).unwrap();
    assert_eq!(a.values(), b.values());
    let (ca, cb) = (Complex::new(0.3, -1.2), Complex::new(2.0, 0.5));
    let lhs = plan.randomize(&f.lin_comb(ca, &g, cb).unwrap()).unwrap();
    let rhs = a.lin_comb(ca, &plan.randomize(&g).unwrap(), cb).unwrap();
    assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * lhs.max_abs());
}

#[test]
fn each_cube_sees_only_neighbouring_coefficients() {
    let f = base_field();
    let part = UnitPartition::new(f.grid()).unwrap();
    let plan = RandomizationPlan::new(f.grid(), 5).unwrap();
    let j = [2i64, -1];
    let local = plan
        .clone()
        .map_coefficients(|k, g| if (k[0] - j[0]).abs().max((k[1] - j[1]).abs()) <= 2 { g } else { Complex::new(0.0, 0.0) });
    let a = part.cube_project(&plan.randomize(&f).unwrap(), &j).unwrap().field;
    let b = part.cube_project(&local.randomize(&f).unwrap(), &j).unwrap().field;
    assert!(a.max_abs() > 0.0);
    assert_eq!(a.values(), b.values());
}

#[test]
fn monte_carlo_mean_vanishes() {
    let f = base_field();
    let ens = Ensemble::consecutive(f.clone(), 1000, 10_000).unwrap();
    let part = UnitPartition::new(f.grid()).unwrap();
    let probes = [0usize, 37, 300, 777, 1023];
    let samples = ens
        .map(&part, |_, fw| {
            let p = fw.physical();
            Ok(probes.iter().map(|&i| p.values()[i]).collect::<Vec<_>>())
        })
        .unwrap();
    for (j, _) in probes.iter().enumerate() {
        for part in [|z: Complex<f64>| z.re, |z: Complex<f64>| z.im] {
            let xs: Vec<f64> = samples.iter().map(|s| part(s[j])).collect();
            let m = stats::mean(&xs);
            assert!(m.abs() <= 4.0 * stats::std_error(&xs), "{m}");
        }
    }
}

#[test]
fn second_moment_in_h_s_matches_cube_sum() {
    // E‖f^ω‖²_{H^s} = Σ_k ‖⟨∇⟩^s □_k f‖²: cross terms vanish by independence.
    let f = base_field();
    let s = 0.4;
    let part = UnitPartition::new(f.grid()).unwrap();
    let weighted = fractional_derivative(&f, Derivative::Inhomogeneous(s)).unwrap();
    let oracle = part.cube_energy_sum(&weighted).unwrap();
    let ens = Ensemble::consecutive(f, 0, 4000).unwrap();
    let xs = ens.map(&part, |_, fw| Ok(sobolev_norm(fw, s, false)?.powi(2))).unwrap();
    let m = stats::mean(&xs);
    assert!((m - oracle).abs() <= 4.0 * stats::std_error(&xs), "{m} vs {oracle}");
}

#[test]
fn synthetic_data_tails() {
    // Lattice sum Σ ⟨ξ⟩^{2σ}|f̂|² ∝ Σ ⟨ξ⟩^{2σ−2s−d−2ε} over the box modes.
    let (s, eps) = (0.5, 0.75);
    let l = TAU;
    let oracle = |n: usize, sigma: f64| -> f64 {
        let h = n as i64 / 2;
        let mut acc = 0.0;
        for a in -h..h {
            for b in -h..h {
                let r2 = (a * a + b * b) as f64;
                acc += (1.0 + r2).powf(sigma - s - 1.0 - eps);
            }
        }
        acc.sqrt()
    };
    let norm = |n: usize, sigma: f64| {
        let g = Grid::new(2, n, l).unwrap();
        let f = synthesize_data(&g, s, eps, Profile::PowerLaw, false, 3).unwrap();
        sobolev_norm(&f, sigma, false).unwrap()
    };
    let conv = norm(128, s) / norm(64, s);
    assert!(rel(conv, oracle(128, s) / oracle(64, s)) < 1e-10);
    assert!(conv < 1.05, "{conv}");
    let div = norm(128, s + 2.0 * eps) / norm(64, s + 2.0 * eps);
    assert!(rel(div, oracle(128, s + 2.0 * eps) / oracle(64, s + 2.0 * eps)) < 1e-10);
    assert!(div >= 1.5, "{div}");
    // normalization: ‖f‖²_{L²} = L^{−d} Σ|f̂|²
    let g = Grid::new(2, 64, l).unwrap();
    let f = synthesize_data(&g, s, eps, Profile::PowerLaw, true, 0).unwrap();
    let l2 = oracle(64, 0.0) / l;
    assert!(rel(f.l2_norm(), l2) < 1e-12);
    assert!(f.values().iter().all(|z| z.im == 0.0 && z.re > 0.0));
}

#[test]
fn single_coefficient_tail_matches_exponential_law() {
    let c = [Complex::new(1.0, 0.0)];
    let lambdas: Vec<f64> = (1..=10).map(|i| 0.2 * i as f64).collect();
    let n = 20_000;
    let rep = tail_check(&c, 7, n, &lambdas).unwrap();
    for (l, p) in rep.lambda.iter().zip(&rep.empirical_prob) {
        let exact = (-l * l).exp();
        let sd = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() <= 4.0 * sd + 1e-12, "λ={l}: {p} vs {exact}");
    }
    assert!((rep.alpha() - 1.0).abs() < 0.1);
}

#[test]
fn tail_curves_collapse_under_scaling() {
    let c: Vec<Complex<f64>> = (0..6).map(|i| Complex::new(1.0 / (1.0 + i as f64), 0.2)).collect();
    let c2: Vec<Complex<f64>> = c.iter().map(|z| z * 2.0).collect();
    let lambdas: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let l2: Vec<f64> = lambdas.iter().map(|l| 2.0 * l).collect();
    let a = tail_check(&c, 1, 5000, &lambdas).unwrap();
    let b = tail_check(&c2, 1, 5000, &l2).unwrap();
    assert_eq!(a.empirical_prob, b.empirical_prob);
    assert!(rel(b.quadratic_fit.slope, a.quadratic_fit.slope) < 1e-12);
    // ‖X‖_{L^p}/(√p‖c‖) stays bounded: for a complex Gaussian it is Γ(1+p/2)^{1/p}/√p.
    for &(p, r) in &a.moment_ratios {
        assert!(r <= 1.0, "p = {p}: {r}");
    }
    let csv = a.to_csv();
    assert!(csv.starts_with("lambda,empirical_prob,bound\n"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn omega_fraction_is_monotone_and_saturates() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let f = synthesize_data(&g, 0.3, 0.5, Profile::CompactBump { radius: 8.0 }, false, 2).unwrap();
    let cfg = OmegaProbeConfig { n0: 4, s: 0.3, epsilon: 0.01, t_max: 0.1, time_samples: 5 };
    let seeds: Vec<u64> = (0..40).collect();
    let m_grid: Vec<f64> = (1..=40).map(|i| 0.5 * i as f64).collect();
    let probe = omega_set_probe(&f, &seeds, &m_grid, &cfg).unwrap();
    assert!(probe.fraction.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*probe.fraction.last().unwrap(), 1.0);
    if let Some(fit) = &probe.complement_fit {
        assert!(fit.slope < 0.0);
    }
    assert!(omega_set_probe(&f, &[], &m_grid, &cfg).is_err());
    let zero = Field::zeros(&g, View::Physical);
    assert!(omega_set_probe(&zero, &seeds, &m_grid, &cfg).is_err());
}
