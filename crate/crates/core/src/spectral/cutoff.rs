//! Smooth profiles used for the unit-cube partition and the Littlewood-Paley cutoff.

use crate::Real;

/// C^∞ monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, built from `e^{-1/t}`.
pub fn smooth_step<T: Real>(t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    if t >= T::one() {
        return T::one();
    }
    let a = (-T::one() / t).exp();
    let b = (-T::one() / (T::one() - t)).exp();
    a / (a + b)
}

/// One-dimensional bump: 1 on `|r| ≤ 1/2`, 0 on `|r| ≥ 1`, even and C^∞.
pub fn unit_bump<T: Real>(r: T) -> T {
    let two = T::of(2.0);
    T::one() - smooth_step(two * r.abs() - T::one())
}

/// Radial Littlewood-Paley cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn lp_cutoff<T: Real>(r: T) -> T {
    T::one() - smooth_step(r - T::one())
}

/// `φ_N(r) = φ(r/N) − φ(2r/N)` for `N ≥ 2`; the `N = 1` block is `φ(r)` itself.
pub fn lp_block<T: Real>(r: T, block: u64) -> T {
    let n = T::of(block as f64);
    if block <= 1 {
        lp_cutoff(r)
    } else {
        lp_cutoff(r / n) - lp_cutoff(T::of(2.0) * r / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_symmetry() {
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bump_support_and_plateau() {
        assert_eq!(unit_bump(0.5f64), 1.0);
        assert_eq!(unit_bump(-0.3f64), 1.0);
        assert_eq!(unit_bump(1.0f64), 0.0);
        assert_eq!(unit_bump(-1.7f64), 0.0);
        let v = unit_bump(0.75f64);
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(unit_bump(0.6f64), unit_bump(-0.6f64));
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(lp_cutoff(0.0f64), 1.0);
        assert_eq!(lp_cutoff(1.0f64), 1.0);
        assert_eq!(lp_cutoff(2.0f64), 0.0);
        assert!((lp_cutoff(1.5f64) - 0.5).abs() < 1e-15);
        // monotone decreasing
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = lp_cutoff(i as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn blocks_telescope() {
        for &r in &[0.0, 0.3, 1.2, 3.7, 9.9, 31.0] {
            let mut s = 0.0f64;
            let mut n = 1u64;
            while n <= 64 {
                s += lp_block(r, n);
                n *= 2;
            }
            assert!((s - lp_cutoff(r / 64.0)).abs() < 1e-14);
        }
    }
}
