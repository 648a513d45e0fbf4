//! Interaction Morawetz functional
//! `M(t) = ∬ (x−y)/|x−y| · p(t,x) m(t,y) dx dy`
//! with `m = ½|w|²`, `p = ½ Im(w̄∇w)`, its time derivative along the flow,
//! and the mass-flux balance `∂ₜm + 2∇·p − Im(e w̄) = 0`.
//!
//! Displacements `x − y` are taken between grid points of a single box (no
//! periodic images), so the convolution with `K(z) = z/|z|` is a linear one
//! and zero padding to `2n` per axis evaluates it exactly.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::norms::{mixed_norm, sobolev_norm};
use crate::solver::Trajectory;
use crate::spectral::{gradient, NdFft};
use crate::{stats, Error, Field, Grid, Real, Result, View};

/// Largest lattice accepted by the brute-force double sum.
pub const DIRECT_LIMIT: usize = 32 * 32 * 32;

/// Mass and momentum densities on the grid (physical space).
#[derive(Clone, Debug)]
pub struct DensityPair<T> {
    /// `½|w|²`.
    pub m: Vec<T>,
    /// `½ Im(w̄ ∂_j w)`, one vector per axis.
    pub p: Vec<Vec<T>>,
}

pub fn densities<T: Real>(w: &Field<T>) -> DensityPair<T> {
    let phys = w.physical();
    let half = T::of(0.5);
    let m = phys.values().iter().map(|z| half * z.norm_sqr()).collect();
    let p = gradient(w)
        .iter()
        .map(|g| {
            phys.values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| half * (a.conj() * b).im)
                .collect()
        })
        .collect();
    DensityPair { m, p }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fft,
    Direct,
}

/// `K ⋆ f` at every grid point, one vector per axis, using a `pad·n` lattice.
fn kernel_convolution<T: Real>(f: &[T], grid: &Grid<T>, pad: usize) -> Vec<Vec<T>> {
    let n = grid.n();
    let dim = grid.dim();
    let big = pad * n;
    let fft = NdFft::<T>::new(big, dim);
    let len = fft.len();
    let dx = grid.dx();
    let coords = |flat: usize| {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for axis in (0..dim).rev() {
            idx[axis] = rest % big;
            rest /= big;
        }
        idx
    };
    let embed = |flat_small: usize| {
        let idx = grid.unflatten(flat_small);
        idx[..dim].iter().fold(0usize, |acc, &i| acc * big + i)
    };
    let displacement = |a: usize| {
        let s = if a < big / 2 { a as f64 } else { a as f64 - big as f64 };
        T::of(s) * dx
    };

    let mut f_hat = vec![Complex::<T>::zero(); len];
    for (i, &v) in f.iter().enumerate() {
        f_hat[embed(i)] = Complex::new(v, T::zero());
    }
    fft.process(&mut f_hat, false);

    let scale = grid.cell_volume() / T::of_usize(len);
    let mut out = vec![vec![T::zero(); f.len()]; dim];
    // Two real kernel components share one complex transform.
    for pair in (0..dim).collect::<Vec<_>>().chunks(2) {
        let mut k: Vec<Complex<T>> = (0..len)
            .into_par_iter()
            .map(|a| {
                let idx = coords(a);
                let z: Vec<T> = (0..dim).map(|ax| displacement(idx[ax])).collect();
                let r = z.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt();
                if r == T::zero() {
                    return Complex::zero();
                }
                let re = z[pair[0]] / r;
                let im = pair.get(1).map(|&ax| z[ax] / r).unwrap_or_else(T::zero);
                Complex::new(re, im)
            })
            .collect();
        fft.process(&mut k, false);
        k.par_iter_mut().zip(f_hat.par_iter()).for_each(|(a, b)| *a = *a * b);
        fft.process(&mut k, true);
        for i in 0..f.len() {
            let z = k[embed(i)].scale(scale);
            out[pair[0]][i] = z.re;
            if let Some(&ax) = pair.get(1) {
                out[ax][i] = z.im;
            }
        }
    }
    out
}

fn pairing<T: Real>(a: &[Vec<T>], b: &[Vec<T>], cell_volume: T) -> T {
    let s = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| p * q).sum::<T>())
        .sum::<T>();
    s * cell_volume
}

/// `∬ K(x−y)·p(x) f(y)` by the brute-force double sum.
fn direct_pairing<T: Real>(p: &[Vec<T>], f: &[T], grid: &Grid<T>) -> T {
    let dim = grid.dim();
    let pos: Vec<[T; 3]> = (0..grid.len()).map(|i| grid.position(i)).collect();
    let rows: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = T::zero();
            for (j, &fj) in f.iter().enumerate() {
                if i == j || fj == T::zero() {
                    continue;
                }
                let mut r2 = T::zero();
                let mut dot = T::zero();
                for ax in 0..dim {
                    let z = pos[i][ax] - pos[j][ax];
                    r2 = r2 + z * z;
                    dot = dot + z * p[ax][i];
                }
                acc = acc + dot / r2.sqrt() * fj;
            }
            acc
        })
        .collect();
    let cv = grid.cell_volume();
    rows.iter().copied().sum::<T>() * cv * cv
}

fn check_direct<T: Real>(grid: &Grid<T>) -> Result<()> {
    if grid.len() > DIRECT_LIMIT {
        let pairs = (grid.len() as f64).powi(2);
        return Err(Error::arg(format!(
            "direct Morawetz sum on {} points needs ~{pairs:.2e} kernel evaluations; limit is {} points",
            grid.len(),
            DIRECT_LIMIT
        )));
    }
    Ok(())
}

/// `M = ∫ p·(K⋆m)`.
pub fn interaction_functional<T: Real>(w: &Field<T>, method: Method) -> Result<T> {
    interaction_functional_padded(w, method, 2)
}

/// [`interaction_functional`] with an explicit padding factor for the FFT path.
pub fn interaction_functional_padded<T: Real>(w: &Field<T>, method: Method, pad: usize) -> Result<T> {
    if pad < 2 {
        return Err(Error::arg("padding factor must be at least 2"));
    }
    let grid = w.grid();
    let d = densities(w);
    match method {
        Method::Fft => Ok(pairing(&d.p, &kernel_convolution(&d.m, grid, pad), grid.cell_volume())),
        Method::Direct => {
            check_direct(grid)?;
            Ok(direct_pairing(&d.p, &d.m, grid))
        }
    }
}

/// Values of the FFT path at padding 2 and 3 on one field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PadCheck {
    pub pad2: f64,
    pub pad3: f64,
    pub relative_difference: f64,
}

pub fn pad_check<T: Real>(w: &Field<T>) -> Result<PadCheck> {
    let a = interaction_functional_padded(w, Method::Fft, 2)?.as_f64();
    let b = interaction_functional_padded(w, Method::Fft, 3)?.as_f64();
    let scale = a.abs().max(b.abs());
    let relative_difference = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
    Ok(PadCheck { pad2: a, pad3: b, relative_difference })
}

fn phys<T: Real>(grid: &Grid<T>, values: Vec<Complex<T>>) -> Field<T> {
    Field::from_values(grid, values, View::Physical).expect("grid length")
}

fn real_field<T: Real>(grid: &Grid<T>, values: &[T]) -> Field<T> {
    phys(grid, values.iter().map(|&x| Complex::new(x, T::zero())).collect())
}

/// `μ|u|²u` in physical space, optionally passed through the 2/3 mask.
fn nonlinearity<T: Real>(u: &[Complex<T>], grid: &Grid<T>, mu: T, dealias: bool) -> Vec<Complex<T>> {
    let f = phys(grid, u.iter().map(|z| z.scale(mu * z.norm_sqr())).collect());
    if !dealias {
        return f.into_values();
    }
    f.multiplied_real(|i| if grid.dealias_keeps(i) { T::one() } else { T::zero() })
        .physical()
        .into_values()
}

/// `(M, dM/dt)` at one instant, the derivative evaluated from
/// `∂ₜw = i(Δw − μ|v+w|²(v+w))`.
fn functional_and_rate<T: Real>(w: &Field<T>, v: Option<&Field<T>>, mu: T, dealias: bool) -> (T, T) {
    let grid = w.grid();
    let wp = w.physical();
    let u: Vec<Complex<T>> = match v {
        Some(v) => wp.values().iter().zip(v.physical().values()).map(|(a, b)| a + b).collect(),
        None => wp.values().to_vec(),
    };
    let f = nonlinearity(&u, grid, mu, dealias);
    let lap = w.multiplied_real(|i| -grid.frequency_norm_sq()[i]).physical();
    let i1 = Complex::new(T::zero(), T::one());
    let dw = phys(grid, lap.values().iter().zip(&f).map(|(l, f)| i1 * (l - f)).collect());
    let gw = gradient(w);
    let gdw = gradient(&dw);
    let half = T::of(0.5);
    let wv = wp.values();
    let dwv = dw.values();
    let m: Vec<T> = wv.iter().map(|z| half * z.norm_sqr()).collect();
    let dm: Vec<T> = wv.iter().zip(dwv).map(|(a, b)| (a.conj() * b).re).collect();
    let p: Vec<Vec<T>> = gw
        .iter()
        .map(|g| wv.iter().zip(g.values()).map(|(a, b)| half * (a.conj() * b).im).collect())
        .collect();
    let dp: Vec<Vec<T>> = gw
        .iter()
        .zip(&gdw)
        .map(|(g, gd)| {
            (0..wv.len())
                .map(|i| half * (dwv[i].conj() * g.values()[i] + wv[i].conj() * gd.values()[i]).im)
                .collect()
        })
        .collect();
    let km = kernel_convolution(&m, grid, 2);
    let kdm = kernel_convolution(&dm, grid, 2);
    let cv = grid.cell_volume();
    (pairing(&p, &km, cv), pairing(&dp, &km, cv) + pairing(&p, &kdm, cv))
}

/// `‖∂ₜm + 2∇·p − Im(e w̄)‖_{L²}` with `∂ₜm` from the neighbouring samples.
fn mass_flux_residual<T: Real>(
    prev: &Field<T>,
    cur: &Field<T>,
    next: &Field<T>,
    dt2: T,
    v: Option<&Field<T>>,
    mu: T,
) -> T {
    let grid = cur.grid();
    let half = T::of(0.5);
    let mp: Vec<T> = prev.physical().values().iter().map(|z| half * z.norm_sqr()).collect();
    let mn: Vec<T> = next.physical().values().iter().map(|z| half * z.norm_sqr()).collect();
    let d = densities(cur);
    let mut div = vec![T::zero(); grid.len()];
    for (ax, comp) in d.p.iter().enumerate() {
        let g = real_field(grid, comp).multiplied(|i| {
            let xi = grid.wavenumbers()[grid.unflatten(i)[ax]];
            Complex::new(T::zero(), xi)
        });
        for (acc, z) in div.iter_mut().zip(g.physical().values()) {
            *acc = *acc + z.re;
        }
    }
    let wp = cur.physical();
    let vp = v.map(|v| v.physical());
    let cv = grid.cell_volume();
    let sum = (0..grid.len())
        .map(|i| {
            let w = wp.values()[i];
            let source = match &vp {
                Some(vp) => {
                    let u = w + vp.values()[i];
                    let e = (u.scale(u.norm_sqr()) - w.scale(w.norm_sqr())).scale(mu);
                    (e * w.conj()).im
                }
                None => T::zero(),
            };
            let r = (mn[i] - mp[i]) / dt2 + T::of(2.0) * div[i] - source;
            r * r
        })
        .sum::<T>();
    (sum * cv).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhsTerms {
    /// `‖w‖²_{L^∞L²}‖w‖²_{L^∞Ḣ^{1/2}}`.
    pub mass_energy: f64,
    /// `‖∇w‖²_{L^∞L²}‖w‖⁴_{L^∞L²}‖v‖²_{L²L^∞}`.
    pub coupling: f64,
    /// `‖v‖⁴_{L⁴_{t,x}}`.
    pub linear: f64,
    pub total: f64,
}

/// `M(T) − M(0)` against `∫ ∂ₜM dt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FtcCheck {
    pub increment: f64,
    pub integral: f64,
    pub defect: f64,
    /// Trapezoid error estimate `3|I_h − I_{2h}|`, floored at rounding level.
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Residuals {
    /// Mass-flux residual at each interior sample.
    pub mass_flux: Vec<f64>,
    pub mass_flux_max: f64,
    pub ftc: FtcCheck,
    /// Samples where `|M| > ‖p‖_{L¹}‖m‖_{L¹}`.
    pub bound_violations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorawetzReport {
    pub times: Vec<f64>,
    #[serde(rename = "M")]
    pub m: Vec<f64>,
    /// Centred finite differences of `M` (one-sided at the ends).
    pub dm_dt: Vec<f64>,
    /// `dM/dt` evaluated from the equation at each sample.
    pub dm_dt_flow: Vec<f64>,
    /// `‖w‖⁴_{L⁴_{t,x}}`.
    pub lhs_l4: f64,
    pub rhs_terms: RhsTerms,
    pub ratio: f64,
    pub residuals: Residuals,
    pub pad_check: PadCheck,
}

fn trapezoid_every(times: &[f64], values: &[f64], step: usize) -> f64 {
    let idx: Vec<usize> = (0..times.len()).step_by(step).collect();
    let mut total = 0.0;
    for w in idx.windows(2) {
        total += 0.5 * (times[w[1]] - times[w[0]]) * (values[w[0]] + values[w[1]]);
    }
    let last = *idx.last().unwrap();
    if last + 1 < times.len() {
        total += stats::trapezoid(&times[last..], &values[last..]);
    }
    total
}

/// Builds the interaction Morawetz report for `w` (and the linear part `v`,
/// if any). `mu` and `dealias` describe the equation `w` solves.
pub fn morawetz_report<T: Real>(
    w: &Trajectory<T>,
    v: Option<&Trajectory<T>>,
    mu: T,
    dealias: bool,
) -> Result<MorawetzReport> {
    if w.len() < 3 {
        return Err(Error::arg("Morawetz report needs at least three samples"));
    }
    if let Some(v) = v {
        let aligned = v.len() == w.len()
            && v.times().iter().zip(w.times()).all(|(a, b)| (*a - *b).abs() <= T::of(1e-12) * (T::one() + b.abs()));
        if !aligned {
            return Err(Error::arg("w and v trajectories are sampled at different times"));
        }
        if v.grid() != w.grid() {
            return Err(Error::GridMismatch);
        }
    }
    let times: Vec<f64> = w.times().iter().map(|t| t.as_f64()).collect();
    let n = times.len();
    let vs = |i: usize| v.map(|v| &v.fields()[i]);

    let pairs: Vec<(T, T)> = (0..n)
        .into_par_iter()
        .map(|i| functional_and_rate(&w.fields()[i], vs(i), mu, dealias))
        .collect();
    let m: Vec<f64> = pairs.iter().map(|p| p.0.as_f64()).collect();
    let dm_dt_flow: Vec<f64> = pairs.iter().map(|p| p.1.as_f64()).collect();
    let dm_dt: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (m[b] - m[a]) / (times[b] - times[a])
        })
        .collect();

    let bound_violations = w
        .fields()
        .iter()
        .zip(&m)
        .filter(|(f, &mv)| {
            let d = densities(f);
            let cv = f.grid().cell_volume().as_f64();
            let pl1: f64 = (0..d.m.len())
                .map(|i| d.p.iter().map(|c| c[i].as_f64().powi(2)).sum::<f64>().sqrt())
                .sum::<f64>()
                * cv;
            let ml1: f64 = d.m.iter().map(|x| x.as_f64()).sum::<f64>() * cv;
            mv.abs() > pl1 * ml1 * (1.0 + 1e-10) + 1e-300
        })
        .count();

    let mass_flux: Vec<f64> = (1..n - 1)
        .into_par_iter()
        .map(|i| {
            let f = w.fields();
            mass_flux_residual(&f[i - 1], &f[i], &f[i + 1], w.times()[i + 1] - w.times()[i - 1], vs(i), mu).as_f64()
        })
        .collect();
    let mass_flux_max = mass_flux.iter().copied().fold(0.0, f64::max);

    let increment = m[n - 1] - m[0];
    let integral = stats::trapezoid(&times, &dm_dt_flow);
    let coarse = trapezoid_every(&times, &dm_dt_flow, 2);
    let scale = m.iter().fold(0.0f64, |a, b| a.max(b.abs()))
        + (times[n - 1] - times[0]) * dm_dt_flow.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tolerance = (3.0 * (integral - coarse).abs()).max(1e-10 * scale);
    let defect = (increment - integral).abs();
    let ftc = FtcCheck { increment, integral, defect, tolerance, passed: defect <= tolerance };

    let lhs_l4 = mixed_norm(w, 4.0, 4.0)?.as_f64().powi(4);
    let w_l2 = mixed_norm(w, f64::INFINITY, 2.0)?.as_f64();
    let mut w_half = 0.0f64;
    let mut w_grad = 0.0f64;
    for f in w.fields() {
        w_half = w_half.max(sobolev_norm(f, 0.5, true)?.as_f64());
        w_grad = w_grad.max(sobolev_norm(f, 1.0, true)?.as_f64());
    }
    let (v_2inf, v_44) = match v {
        Some(v) => (mixed_norm(v, 2.0, f64::INFINITY)?.as_f64(), mixed_norm(v, 4.0, 4.0)?.as_f64()),
        None => (0.0, 0.0),
    };
    let mass_energy = w_l2.powi(2) * w_half.powi(2);
    let coupling = w_grad.powi(2) * w_l2.powi(4) * v_2inf.powi(2);
    let linear = v_44.powi(4);
    let total = mass_energy + coupling + linear;
    let ratio = if lhs_l4 == 0.0 { 0.0 } else { lhs_l4 / total };

    Ok(MorawetzReport {
        times,
        m,
        dm_dt,
        dm_dt_flow,
        lhs_l4,
        rhs_terms: RhsTerms { mass_energy, coupling, linear, total },
        ratio,
        residuals: Residuals { mass_flux, mass_flux_max, ftc, bound_violations },
        pad_check: pad_check(&w.fields()[0])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    /// A moving packet next to a resting one, so `M` does not cancel.
    fn packet(g: &Grid<f64>, centre: f64, k: f64) -> Field<f64> {
        let d = g.dim();
        Field::from_fn(g, |x| {
            let bump = |c: f64| (-x[..d].iter().map(|y| (y - c).powi(2)).sum::<f64>()).exp();
            Complex::from_polar(bump(0.5 * centre), k * x[0]) + Complex::new(0.7 * bump(1.5 * centre), 0.0)
        })
    }

    #[test]
    fn real_field_has_no_momentum() {
        let g = Grid::new(2, 16, TAU).unwrap();
        let f = Field::from_fn(&g, |x| Complex::new(x[0].sin() + 0.5, 0.0));
        let d = densities(&f);
        assert!(d.p.iter().flatten().all(|x| x.abs() < 1e-14));
        assert!(interaction_functional(&f, Method::Fft).unwrap().abs() < 1e-14);
    }

    #[test]
    fn plane_wave_densities() {
        let g = Grid::new(2, 16, TAU).unwrap();
        let f = Field::plane_wave(&g, &[2, -1], Complex::new(0.8, 0.0));
        let d = densities(&f);
        for i in 0..g.len() {
            assert!((d.m[i] - 0.32).abs() < 1e-13);
            assert!((d.p[0][i] - 0.64).abs() < 1e-12);
            assert!((d.p[1][i] + 0.32).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_matches_direct_in_2d() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let f = packet(&g, 3.0, 1.3);
        let a = interaction_functional(&f, Method::Fft).unwrap();
        let b = interaction_functional(&f, Method::Direct).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn direct_rejects_large_grids() {
        let g = Grid::new(3, 64, TAU).unwrap();
        let f = Field::zeros(&g, View::Physical);
        let err = interaction_functional(&f, Method::Direct).unwrap_err();
        assert!(err.to_string().contains("kernel evaluations"));
    }

    #[test]
    fn quartic_scaling() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        let f = packet(&g, 3.0, 0.7);
        let a = interaction_functional(&f, Method::Fft).unwrap();
        let b = interaction_functional(&f.scaled(Complex::new(0.0, 2.0)), Method::Fft).unwrap();
        assert!((b - 16.0 * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn swapped_double_sum_agrees() {
        // ∬K(x−y)·p(x)m(y) = −∬K(y−x)·p(x)m(y)
        let g = Grid::new(2, 8, 8.0).unwrap();
        let f = packet(&g, 3.0, 1.1);
        let d = densities(&f);
        let pos: Vec<[f64; 3]> = (0..g.len()).map(|i| g.position(i)).collect();
        let mut swapped = 0.0;
        for i in 0..g.len() {
            for j in 0..g.len() {
                if i == j {
                    continue;
                }
                let z = [pos[j][0] - pos[i][0], pos[j][1] - pos[i][1]];
                let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
                swapped -= (z[0] * d.p[0][i] + z[1] * d.p[1][i]) / r * d.m[j];
            }
        }
        swapped *= g.cell_volume().powi(2);
        let direct = interaction_functional(&f, Method::Direct).unwrap();
        assert!((swapped - direct).abs() <= 1e-12 * direct.abs());
    }
}
