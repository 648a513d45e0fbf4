//! Fast closed-form checks of the numerical core, run by `wnls selftest`.

use std::f64::consts::TAU;

use nls_core::morawetz::{densities, interaction_functional, Method};
use nls_core::norms::{lebesgue_norm, sobolev_norm};
use nls_core::randomization::RandomizationPlan;
use nls_core::solver::{energy, evolve_full, mass, SolverConfig};
use nls_core::spectral::{dyadic_project, free_propagate, DyadicMode, UnitPartition};
use nls_core::{Complex, Field, Grid, View};
use nls_lab::experiments::{predicted_exponent, scattering_diagnostic, ScatterConfig};

pub struct Check {
    pub name: &'static str,
    pub detail: String,
    pub passed: bool,
}

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn within(err: f64, tol: f64) -> (bool, String) {
    (err <= tol, format!("error {err:.2e} (tolerance {tol:.0e})"))
}

fn grid(dim: usize, n: usize) -> Grid<f64> {
    Grid::new(dim, n, TAU).expect("valid grid")
}

fn lattice_spacing() -> Outcome {
    let g = Grid::new(3, 64, 32.0 * std::f64::consts::PI)?;
    Ok(within((g.frequency_spacing() - 1.0 / 16.0).abs(), 1e-15))
}

fn rejects_non_power_of_two() -> Outcome {
    Ok((Grid::<f64>::new(2, 12, 1.0).is_err(), "n = 12 rejected".into()))
}

fn constant_is_dc() -> Outcome {
    let g = grid(2, 16);
    let f = Field::from_fn(&g, |_| Complex::new(2.0, 0.0)).frequency();
    let off = f.values()[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(within(off, 1e-12))
}

fn partition_of_unity() -> Outcome {
    let p = UnitPartition::new(&grid(3, 16))?;
    Ok(within(p.partition_defect(), 1e-12))
}

fn cubes_reconstruct() -> Outcome {
    let g = grid(2, 32);
    let f = RandomizationPlan::new(&g, 1)?.randomize(&Field::from_fn(&g, |x| Complex::new(x[0].sin(), x[1].cos())))?;
    let p = UnitPartition::new(&g)?;
    Ok(within(p.cube_sum(&f)?.max_abs_diff(&f)?, 1e-10))
}

fn low_projection_keeps_constant() -> Outcome {
    let g = grid(2, 32);
    let f = Field::from_fn(&g, |_| Complex::new(1.5, 0.0));
    Ok(within(dyadic_project(&f, 4, DyadicMode::Leq)?.field.max_abs_diff(&f)?, 1e-12))
}

fn free_flow_of_a_mode() -> Outcome {
    let g = grid(1, 32);
    let t = 0.7;
    let f = Field::plane_wave(&g, &[3], Complex::new(1.0, 0.0));
    let want = Field::plane_wave(&g, &[3], Complex::from_polar(1.0, -9.0 * t));
    Ok(within(free_propagate(&f, t).max_abs_diff(&want)?, 1e-12))
}

fn zero_data_randomizes_to_zero() -> Outcome {
    let g = grid(2, 16);
    let z = Field::zeros(&g, View::Physical);
    Ok(within(RandomizationPlan::new(&g, 9)?.randomize(&z)?.max_abs(), 0.0))
}

fn zero_data_stays_zero() -> Outcome {
    let g = grid(1, 32);
    let tr = evolve_full(&Field::zeros(&g, View::Physical), &SolverConfig::new(0.01, 0.1))?;
    Ok(within(tr.fields().iter().map(Field::max_abs).fold(0.0, f64::max), 0.0))
}

fn plane_wave_conserved_quantities() -> Outcome {
    let g = grid(1, 32);
    let (a, k) = (0.5, 2.0);
    let u = Field::plane_wave(&g, &[2], Complex::new(a, 0.0));
    let v = g.volume();
    let m_err = (mass(&u) - a * a * v).abs();
    let e_err = (energy(&u, 1.0) - (0.5 * k * k * a * a * v + 0.25 * a.powi(4) * v)).abs();
    Ok(within(m_err.max(e_err), 1e-12))
}

fn sobolev_of_a_mode() -> Outcome {
    let g = grid(1, 32);
    let u = Field::plane_wave(&g, &[3], Complex::new(1.0, 0.0));
    let want = 10f64.powf(0.25) * g.volume().sqrt();
    Ok(within((sobolev_norm(&u, 0.5, false)? - want).abs(), 1e-12))
}

fn zero_field_norms() -> Outcome {
    let z = Field::zeros(&grid(2, 16), View::Physical);
    Ok(within(sobolev_norm(&z, 1.0, false)? + lebesgue_norm(&z, 4.0), 0.0))
}

fn real_field_has_no_momentum() -> Outcome {
    let g = grid(3, 8);
    let w = Field::from_fn(&g, |x| Complex::new((x[0] + 2.0 * x[1]).cos() + 1.0, 0.0));
    let d = densities(&w);
    let p = d.p.iter().flat_map(|c| c.iter()).map(|v| v.abs()).fold(0.0, f64::max);
    let m = interaction_functional(&w, Method::Fft)?.abs();
    Ok(within(p.max(m), 1e-12))
}

fn exponent_arithmetic() -> Outcome {
    Ok(within((predicted_exponent(0.5) - 1.0).abs(), 0.0))
}

fn linear_run_scatters_trivially() -> Outcome {
    let g = grid(1, 32);
    let u0 = Field::from_fn(&g, |x| Complex::new((-(x[0] - 3.0).powi(2)).exp(), 0.0));
    let tr = evolve_full(&u0, &SolverConfig::new(0.002, 1.0).with_mu(0.0).with_stride(50))?;
    Ok(within(scattering_diagnostic(&tr, &ScatterConfig::default())?.max_entry(), 1e-10))
}

const CHECKS: &[(&str, fn() -> Outcome)] = &[
    ("frequency spacing 2π/L", lattice_spacing),
    ("grid rejects n not a power of two", rejects_non_power_of_two),
    ("constant field lives at ξ = 0", constant_is_dc),
    ("cube partition sums to one", partition_of_unity),
    ("cube pieces reconstruct the field", cubes_reconstruct),
    ("low-frequency projection fixes constants", low_projection_keeps_constant),
    ("free flow of a single mode", free_flow_of_a_mode),
    ("randomizing zero gives zero", zero_data_randomizes_to_zero),
    ("zero data stays zero", zero_data_stays_zero),
    ("plane-wave mass and energy", plane_wave_conserved_quantities),
    ("Sobolev norm of a single mode", sobolev_of_a_mode),
    ("norms of the zero field", zero_field_norms),
    ("real fields carry no momentum", real_field_has_no_momentum),
    ("predicted exponent 2(1 − s)", exponent_arithmetic),
    ("linear runs have zero Cauchy distance", linear_run_scatters_trivially),
];

pub fn run_all() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|&(name, check)| match check() {
            Ok((passed, detail)) => Check { name, detail, passed },
            Err(e) => Check { name, detail: format!("error: {e}"), passed: false },
        })
        .collect()
}
