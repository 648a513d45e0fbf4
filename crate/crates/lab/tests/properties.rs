use std::f64::consts::TAU;

use nls_core::{Complex, Grid};
use nls_lab::estimates::*;
use nls_lab::{RatioSweep, SweepPoint};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex<f64>> {
    (-50.0..50.0f64, -50.0..50.0f64)
        .prop_filter("nonzero", |(a, b)| a.hypot(*b) > 1e-3)
        .prop_map(|(a, b)| Complex::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn strichartz_ratio_ignores_amplitude(c in complex(), block in 0u32..3) {
        let g = Grid::new(1, 64, TAU).unwrap();
        let phi = rescaled_gaussian(&g, 2u64.pow(block)).unwrap();
        let w = TimeWindow::new(0.05, 8);
        let a = strichartz_ratio(&phi, 8.0, 4.0, w).unwrap();
        let b = strichartz_ratio(&phi.scaled(c), 8.0, 4.0, w).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn smoothing_ratio_ignores_amplitude(c in complex(), freq in 2.0..8.0f64) {
        let g = Grid::new(1, 128, 4.0 * TAU).unwrap();
        let f = modulated_packet(&g, freq, 1.0);
        let w = TimeWindow::new(0.2, 8);
        let a = local_smoothing_ratio(&f, &[1.0, 3.0], w).unwrap();
        let b = local_smoothing_ratio(&f.scaled(c), &[1.0, 3.0], w).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert!((p.ratio - q.ratio).abs() <= 1e-12 * p.ratio);
        }
    }

    #[test]
    fn bilinear_ratio_ignores_amplitude(c in complex(), d in complex(), seed in any::<u64>()) {
        let g = Grid::new(1, 64, TAU).unwrap();
        let cfg = BilinearConfig { time_samples: 4, ..Default::default() };
        let phi = random_block(&g, 16, seed);
        let psi = random_block(&g, 2, seed ^ 1);
        let a = bilinear_pair_ratio(&phi, &psi, 16, 2, &cfg).unwrap();
        let b = bilinear_pair_ratio(&phi.scaled(c), &psi.scaled(d), 16, 2, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn sweep_fit_recovers_power_laws(slope in -2.0..2.0f64, amp in 0.1..10.0f64) {
        let points = [1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&n: &f64| SweepPoint::new([("N", n)], amp * n.powf(slope), 1.0).unwrap())
            .collect();
        let mut sweep = RatioSweep::new("law", points);
        let fit = sweep.fit_axis("N").unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!(fit.residuals.iter().all(|r| r.abs() < 1e-10));
    }
}
