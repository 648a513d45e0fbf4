mod common;

use common::{band_limited, noise};
use nls_core::spectral::cutoff::lp_block;
use nls_core::spectral::partition::psi0;
use nls_core::spectral::{
    dyadic_blocks, dyadic_project, fractional_derivative, free_propagate, Derivative, DyadicMode, UnitPartition,
};
use nls_core::{Complex, Field, Grid, View};
use std::f64::consts::{PI, TAU};

#[test]
fn grid_examples() {
    let g = Grid::<f64>::new(1, 8, TAU).unwrap();
    assert_eq!(g.dx(), TAU / 8.0);
    let mut xi: Vec<f64> = g.wavenumbers().to_vec();
    xi.sort_by(f64::total_cmp);
    assert_eq!(xi, vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
    let g = Grid::<f64>::new(3, 64, 32.0 * PI).unwrap();
    assert!((g.frequency_spacing() - 1.0 / 16.0).abs() < 1e-15);
    assert_eq!(g.dx() * 64.0, g.box_length());
    assert!(Grid::<f64>::new(2, 12, 1.0).is_err());
    assert!(Grid::<f64>::new(4, 8, 1.0).is_err());
}

#[test]
fn constant_and_single_mode_spectra() {
    let g = Grid::new(2, 16, TAU).unwrap();
    let c = Field::from_fn(&g, |_| Complex::new(2.5, -1.0)).frequency();
    assert!(c.values()[1..].iter().all(|z| z.norm() < 1e-13));
    let w = Field::plane_wave(&g, &[3, -2], Complex::new(1.0, 0.0)).frequency();
    let big: Vec<usize> = (0..g.len()).filter(|&i| w.values()[i].norm() > 1e-10).collect();
    assert_eq!(big.len(), 1);
    assert_eq!(g.frequency(big[0])[..2], [3.0, -2.0]);
}

#[test]
fn round_trip_and_parseval() {
    for (d, n) in [(1, 64), (2, 32), (3, 16)] {
        let g = Grid::new(d, n, 5.0).unwrap();
        let f = noise(&g, 7);
        let back = f.frequency().physical();
        let err = f.max_abs_diff(&back).unwrap() / f.max_abs();
        assert!(err < 1e-12, "round trip {err}");
        let phys: f64 = f.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.cell_volume();
        let freq = f.frequency().norm_sq();
        assert!(common::rel(freq, phys) < 1e-10);
    }
}

#[test]
fn transform_rejects_non_finite() {
    let g = Grid::new(1, 16, TAU).unwrap();
    let mut f = noise(&g, 1);
    f.values_mut()[4] = Complex::new(f64::INFINITY, 0.0);
    assert!(f.transform(View::Frequency).is_err());
}

#[test]
fn partition_of_unity_in_three_dimensions() {
    let g = Grid::new(3, 32, TAU).unwrap();
    let part = UnitPartition::new(&g).unwrap();
    assert!(part.partition_defect() <= 1e-12);
    let f = noise(&g, 3);
    let sum = part.cube_sum(&f).unwrap().physical();
    assert!(sum.max_abs_diff(&f).unwrap() <= 1e-10 * f.max_abs());
}

#[test]
fn psi0_support_and_symmetry() {
    let pts = [0.0, 0.2, 0.49, 0.5, 0.73, 0.99];
    for &a in &pts {
        for &b in &pts {
            assert_eq!(psi0(&[a, b]), psi0(&[-a, -b]));
            assert!((0.0..=1.0).contains(&psi0(&[a, b])));
        }
    }
    for xi in [[1.0, 0.0], [0.0, -1.0], [1.3, 0.2], [-2.0, 4.0]] {
        assert_eq!(psi0(&xi), 0.0);
    }
}

#[test]
fn partition_rejects_small_box() {
    let g = Grid::new(1, 16, 1.0).unwrap();
    assert!(UnitPartition::new(&g).is_err());
}

#[test]
fn cube_projection_support_and_energy() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let part = UnitPartition::new(&g).unwrap();
    let far = Field::plane_wave(&g, &[1, 3], Complex::new(1.0, 0.0));
    assert!(part.cube_project(&far, &[0, 0]).unwrap().field.max_abs() < 1e-13);
    let out = part.cube_project(&far, &[500, 0]).unwrap();
    assert!(out.clipped && out.field.max_abs() == 0.0);

    let f = noise(&g, 9);
    let direct: f64 = {
        let (lo, hi) = part.cube_range();
        let mut s = 0.0;
        for a in lo..=hi {
            for b in lo..=hi {
                s += part.cube_project(&f, &[a, b]).unwrap().field.norm_sq();
            }
        }
        s
    };
    assert!(common::rel(part.cube_energy_sum(&f).unwrap(), direct) < 1e-12);
    // ψ_k² sums to between 2^{-d} and 1 where Σψ_k = 1.
    let ratio = f.norm_sq() / direct;
    assert!((1.0 - 1e-12..=4.0).contains(&ratio), "{ratio}");

    // On a finer lattice some frequencies sit between cube centres.
    let g = Grid::new(2, 64, 4.0 * TAU).unwrap();
    let part = UnitPartition::new(&g).unwrap();
    let f = noise(&g, 10);
    let ratio = f.norm_sq() / part.cube_energy_sum(&f).unwrap();
    assert!(ratio > 1.01 && ratio <= 4.0, "{ratio}");
}

#[test]
fn dyadic_blocks_reconstruct() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let f = noise(&g, 5);
    let mut acc = Field::zeros(&g, View::Frequency);
    for n in dyadic_blocks(&g) {
        acc = acc.add(&dyadic_project(&f, n, DyadicMode::Exact).unwrap().field).unwrap();
    }
    assert!(acc.physical().max_abs_diff(&f).unwrap() <= 1e-10 * f.max_abs());
    for n in [1, 4, 16] {
        let lo = dyadic_project(&f, n, DyadicMode::Leq).unwrap().field;
        let hi = dyadic_project(&f, n, DyadicMode::Geq).unwrap().field;
        assert!(lo.add(&hi).unwrap().physical().max_abs_diff(&f).unwrap() <= 1e-12 * f.max_abs());
    }
}

#[test]
fn low_pass_keeps_constants_and_is_idempotent_on_its_plateau() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let c = Field::from_fn(&g, |_| Complex::new(1.5, 0.5));
    for n in [1, 2, 8] {
        let p = dyadic_project(&c, n, DyadicMode::Leq).unwrap().field.physical();
        assert!(p.max_abs_diff(&c).unwrap() < 1e-13);
    }
    // P_{≤N} is a projector only on its plateau; on band-limited data it is exactly idempotent.
    let f = band_limited(&g, 2, 2);
    let once = dyadic_project(&f, 8, DyadicMode::Leq).unwrap().field;
    let twice = dyadic_project(&once, 8, DyadicMode::Leq).unwrap().field;
    assert!(once.max_abs_diff(&twice).unwrap() <= 1e-12 * once.max_abs());
}

#[test]
fn mode_at_one_and_a_half_n_is_halved() {
    // smooth_step(1/2) = e^{-2}/(e^{-2}+e^{-2}) = 1/2, so φ(1.5) = 1/2 and φ(3) = 0.
    let oracle = {
        let t = 0.5f64;
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        1.0 - a / (a + b)
    };
    let g = Grid::new(1, 64, TAU).unwrap();
    for n in [2u64, 4, 8] {
        let mode = (3 * n / 2) as i64;
        let f = Field::plane_wave(&g, &[mode], Complex::new(1.0, 0.0));
        let p = dyadic_project(&f, n, DyadicMode::Exact).unwrap().field.physical();
        let expect = f.scaled(Complex::new(oracle, 0.0));
        assert!(p.max_abs_diff(&expect).unwrap() < 1e-13);
        assert_eq!(lp_block(1.5 * n as f64, n), oracle);
    }
}

#[test]
fn far_blocks_are_orthogonal() {
    let g = Grid::new(2, 64, TAU).unwrap();
    let f = noise(&g, 8);
    let p2 = dyadic_project(&f, 2, DyadicMode::Exact).unwrap().field;
    let p8 = dyadic_project(&p2, 8, DyadicMode::Exact).unwrap().field;
    assert!(p8.max_abs() < 1e-14);
}

#[test]
fn exact_block_above_nyquist_is_flagged() {
    let g = Grid::new(1, 16, TAU).unwrap();
    let out = dyadic_project(&noise(&g, 0), 64, DyadicMode::Exact).unwrap();
    assert!(out.clipped);
    assert_eq!(out.field.max_abs(), 0.0);
    assert!(dyadic_project(&noise(&g, 0), 3, DyadicMode::Exact).is_err());
}

#[test]
fn fractional_derivatives() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let w = Field::plane_wave(&g, &[3, 1], Complex::new(1.0, 0.0));
    let d2 = fractional_derivative(&w, Derivative::Homogeneous(2.0)).unwrap().physical();
    assert!(d2.max_abs_diff(&w.scaled(Complex::new(10.0, 0.0))).unwrap() < 1e-12);
    let f = noise(&g, 4);
    let id = fractional_derivative(&f, Derivative::Inhomogeneous(0.0)).unwrap().physical();
    assert!(id.max_abs_diff(&f).unwrap() < 1e-12 * f.max_abs());

    assert!(fractional_derivative(&f, Derivative::Homogeneous(-0.5)).is_err());
    let mut spec = f.frequency();
    spec.values_mut()[0] = Complex::new(0.0, 0.0);
    let ab = fractional_derivative(
        &fractional_derivative(&spec, Derivative::Homogeneous(0.7)).unwrap(),
        Derivative::Homogeneous(-0.2),
    )
    .unwrap();
    let direct = fractional_derivative(&spec, Derivative::Homogeneous(0.5)).unwrap();
    assert!(ab.max_abs_diff(&direct).unwrap() < 1e-10 * direct.max_abs());

    // H^s by multiplier vs the frequency sum written out
    let s = 0.8;
    let via_op = nls_core::norms::sobolev_norm(&f, s, false).unwrap();
    let spec = f.frequency();
    let sum: f64 = (0..g.len())
        .map(|i| {
            let xi = g.frequency(i);
            (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(s) * spec.values()[i].norm_sqr()
        })
        .sum();
    assert!(common::rel(via_op, (sum * g.cell_volume()).sqrt()) < 1e-10);
}

#[test]
fn free_propagation_basics() {
    let g = Grid::new(2, 32, TAU).unwrap();
    let f = noise(&g, 6);
    assert!(free_propagate(&f, 0.0).physical().max_abs_diff(&f).unwrap() < 1e-13);
    let t = 0.37;
    let w = Field::plane_wave(&g, &[2, -3], Complex::new(1.0, 0.0));
    let expect = w.scaled(Complex::from_polar(1.0, -13.0 * t));
    assert!(free_propagate(&w, t).physical().max_abs_diff(&expect).unwrap() < 1e-12);

    let a = free_propagate(&free_propagate(&f, 0.3), 0.45);
    let b = free_propagate(&f, 0.75);
    assert!(a.max_abs_diff(&b).unwrap() < 1e-12 * f.max_abs());
    assert!(common::rel(b.norm_sq(), f.norm_sq()) < 1e-12);

    for n in [2, 8] {
        let pu = dyadic_project(&free_propagate(&f, 0.3), n, DyadicMode::Exact).unwrap().field;
        let up = free_propagate(&dyadic_project(&f, n, DyadicMode::Exact).unwrap().field, 0.3);
        assert!(pu.max_abs_diff(&up).unwrap() < 1e-12 * f.max_abs());
        let before = dyadic_project(&f, n, DyadicMode::Exact).unwrap().field.norm_sq();
        assert!(common::rel(pu.norm_sq(), before) < 1e-12);
    }
}

#[test]
fn free_gaussian_matches_closed_form() {
    // i∂ₜu + ∂²ₓu = 0 with u₀ = e^{−(x−c)²/2a}: u = √(a/(a+2it)) e^{−(x−c)²/2(a+2it)}.
    let l = 40.0;
    let (a, c, t) = (1.0, 20.0, 1.0);
    let g = Grid::new(1, 256, l).unwrap();
    let u0 = common::gaussian(&g, c, a);
    let u = free_propagate(&u0, t).physical();
    let z = Complex::new(a, 2.0 * t);
    let amp = (Complex::new(a, 0.0) / z).sqrt();
    let mut err = 0.0f64;
    for i in 0..g.len() {
        let x = g.position(i)[0];
        let exact: Complex<f64> = (-3..=3)
            .map(|m| {
                let y = x - c + m as f64 * l;
                amp * (-(y * y) / (z * 2.0)).exp()
            })
            .sum();
        err = err.max((u.values()[i] - exact).norm());
    }
    assert!(err < 1e-8, "{err}");
}
