mod common;

use common::{band_limited, rel};
use nls_core::norms::{
    dyadic_mixed_norm, mixed_norm, norm_report, sobolev_norm, x_proxy_norm, y_norm, y_tilde_norm, z_norm,
};
use nls_core::randomization::{synthesize_data, Ensemble, Profile};
use nls_core::solver::{evolve_full, mass, SolverConfig, Trajectory};
use nls_core::spectral::{dyadic_blocks, free_propagate, Derivative, UnitPartition};
use nls_core::{stats, Complex, Field, Grid, View};
use std::f64::consts::TAU;

fn free(phi: &Field<f64>, t: f64, samples: usize) -> Trajectory<f64> {
    Trajectory::free_evolution(phi, &Trajectory::uniform_times(t, samples)).unwrap()
}

#[test]
fn sobolev_examples() {
    let g = Grid::new(2, 16, TAU).unwrap();
    let w = Field::plane_wave(&g, &[2, 1], Complex::new(1.0, 0.0));
    let v = TAU * TAU;
    assert!(rel(sobolev_norm(&w, 0.6, false).unwrap(), 6f64.powf(0.3) * v.sqrt()) < 1e-12);
    let f = common::noise(&g, 2);
    assert!(rel(sobolev_norm(&f, 0.0, false).unwrap(), f.l2_norm()) < 1e-14);
    assert!(f.l2_norm() <= sobolev_norm(&f, 0.3, false).unwrap());
    let after = free_propagate(&f, 0.8);
    assert!(rel(sobolev_norm(&after, 0.7, false).unwrap(), sobolev_norm(&f, 0.7, false).unwrap()) < 1e-12);
}

#[test]
fn l_inf_l2_of_a_full_run_is_the_mass() {
    let g = Grid::new(1, 128, 20.0).unwrap();
    let u0 = common::gaussian(&g, 10.0, 1.0);
    let tr = evolve_full(&u0, &SolverConfig::new(0.01, 0.5)).unwrap();
    let n = mixed_norm(&tr, f64::INFINITY, 2.0).unwrap();
    assert!(rel(n, mass(&u0).sqrt()) < 1e-10);
}

#[test]
fn time_quadrature_converges() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let phi = band_limited(&g, 1, 4);
    let a = mixed_norm(&free(&phi, 0.5, 201), 4.0, 6.0).unwrap();
    let b = mixed_norm(&free(&phi, 0.5, 401), 4.0, 6.0).unwrap();
    assert!(rel(a, b) < 0.01);
}

#[test]
fn single_block_field() {
    // |k| = N lies where φ_N = 1 and every other block vanishes.
    let g = Grid::new(2, 32, TAU).unwrap();
    let w = Field::plane_wave(&g, &[4, 0], Complex::new(0.7, 0.0));
    let tr = free(&w, 0.3, 9);
    let d = dyadic_mixed_norm(&tr, Derivative::none(), 4.0, 6.0).unwrap();
    assert!(rel(d.value, mixed_norm(&tr, 4.0, 6.0).unwrap()) < 1e-12);
    assert_eq!(d.blocks.iter().filter(|b| b.1 > 1e-12).count(), 1);
}

#[test]
fn dyadic_l2_versus_full_norm() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let tr = free(&common::noise(&g, 3), 0.2, 5);
    let full = mixed_norm(&tr, f64::INFINITY, 2.0).unwrap();
    let d = dyadic_mixed_norm(&tr, Derivative::none(), f64::INFINITY, 2.0).unwrap();
    let nb = dyadic_blocks(&g).len() as f64;
    // Σφ_N = 1 with at most two overlapping blocks gives Σφ_N² ∈ [1/2, 1].
    let ratio = d.value / full;
    assert!(ratio >= 0.5f64.sqrt() - 1e-12 && ratio <= nb.sqrt(), "{ratio}");
}

#[test]
fn refinement_adds_only_empty_blocks() {
    let coarse = Grid::new(2, 32, TAU).unwrap();
    let fine = Grid::new(2, 64, TAU).unwrap();
    let spectrum = |xi: [f64; 3]| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2 <= 9.0 {
            Complex::new(1.0 / (1.0 + r2), 0.5 * xi[0] / (1.0 + r2))
        } else {
            Complex::new(0.0, 0.0)
        }
    };
    // same continuum function: unitary coefficients scale with n^{d/2}
    let a = Field::from_spectrum(&coarse, |xi| spectrum(xi) * 32.0);
    let b = Field::from_spectrum(&fine, |xi| spectrum(xi) * 64.0);
    let ta = free(&a, 0.2, 5);
    let tb = free(&b, 0.2, 5);
    for (q, r) in [(f64::INFINITY, 2.0), (4.0, 4.0)] {
        let da = dyadic_mixed_norm(&ta, Derivative::Homogeneous(0.5), q, r).unwrap();
        let db = dyadic_mixed_norm(&tb, Derivative::Homogeneous(0.5), q, r).unwrap();
        assert_eq!(db.blocks.len(), da.blocks.len() + 1);
        assert!(rel(da.value, db.value) < 1e-10, "{} vs {}", da.value, db.value);
    }
}

#[test]
fn dyadic_norm_needs_two_blocks_and_valid_exponents() {
    let g = Grid::new(1, 8, TAU).unwrap();
    let tr = free(&common::noise(&g, 0), 0.1, 3);
    assert!(dyadic_mixed_norm(&tr, Derivative::none(), 2.0, 0.5).is_err());
}

#[test]
fn composite_norms_of_zero_and_monotonicity() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let z = free(&Field::zeros(&g, View::Physical), 0.2, 4);
    assert_eq!(y_norm(&z, 0.3, 0.01).unwrap().value, 0.0);
    assert_eq!(z_norm(&z, 0.3, 0.01).unwrap().value, 0.0);
    assert_eq!(y_tilde_norm(&z, 0.3, 0.01).unwrap().value, 0.0);
    assert_eq!(x_proxy_norm(&z, 0.5).unwrap().value, 0.0);

    let tr = free(&band_limited(&g, 4, 4), 0.4, 21);
    let short = y_norm(&tr.truncated(0.2), 0.3, 0.01).unwrap().value;
    let long = y_norm(&tr, 0.3, 0.01).unwrap().value;
    assert!(short <= long);
    let rep = norm_report(&tr, &["y", "z", "y_tilde", "x_proxy"], 0.3, 0.01).unwrap();
    assert_eq!(rep.len(), 4);
    let json = serde_json::to_string(&rep).unwrap();
    assert!(json.contains("\"constituents\"") && json.contains("\"caps\""));
}

#[test]
fn holder_interpolation_in_time() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let tr = free(&band_limited(&g, 6, 4), 0.5, 101);
    let (q1, q2, theta) = (2.0, 8.0, 0.5);
    let q = 1.0 / (theta / q1 + (1.0 - theta) / q2);
    let lhs = mixed_norm(&tr, q, 6.0).unwrap();
    let rhs = mixed_norm(&tr, q1, 6.0).unwrap().powf(theta) * mixed_norm(&tr, q2, 6.0).unwrap().powf(1.0 - theta);
    assert!(lhs <= rhs * 1.01, "{lhs} vs {rhs}");
}

#[test]
fn y_norm_of_randomized_flow_is_stable_in_seed_count() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let f = synthesize_data(&g, 0.3, 0.5, Profile::CompactBump { radius: 8.0 }, false, 1).unwrap();
    let part = UnitPartition::new(&g).unwrap();
    let times = Trajectory::uniform_times(0.1, 5);
    let stat = |seeds: usize| {
        Ensemble::consecutive(f.clone(), 500, seeds)
            .unwrap()
            .map(&part, |_, fw| Ok(y_norm(&Trajectory::free_evolution(fw, &times)?, 0.3, 0.01)?.value))
            .unwrap()
    };
    let small = stat(200);
    let big = stat(400);
    assert!(small.iter().all(|v| v.is_finite()));
    let diff = (stats::mean(&small) - stats::mean(&big)).abs();
    assert!(diff <= 4.0 * stats::std_error(&small), "{diff}");
}
