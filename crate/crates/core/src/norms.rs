//! Discrete Sobolev, mixed space-time and dyadic `l²_N` norms, and the
//! composite `Y^s`, `Z^s`, `Ỹ^s` norms.
//!
//! Exponents are `f64`; `f64::INFINITY` selects the grid maximum (space) or
//! the sample maximum (time). Time integrals use the composite trapezoid rule
//! on the stored samples.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::solver::Trajectory;
use crate::spectral::cutoff::lp_block;
use crate::spectral::{dyadic_blocks, fractional_derivative, Derivative};
use crate::{Error, Field, Real, Result, View};

/// Default `ε` realizing the `s−` exponents.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// `‖f‖_{H^s}` (weight `⟨ξ⟩^s`) or `‖f‖_{Ḣ^s}` (weight `|ξ|^s`).
pub fn sobolev_norm<T: Real>(field: &Field<T>, s: f64, homogeneous: bool) -> Result<T> {
    let d = if homogeneous { Derivative::Homogeneous(s) } else { Derivative::Inhomogeneous(s) };
    Ok(fractional_derivative(field, d)?.l2_norm())
}

/// Spatial `L^r` norm by grid quadrature.
pub fn lebesgue_norm<T: Real>(field: &Field<T>, r: f64) -> T {
    let phys = field.physical();
    lr_of_values(phys.values(), r, field.grid().cell_volume())
}

/// `(cv·Σ|u|^r)^{1/r}`, evaluated relative to the maximum so large `r` cannot overflow.
fn lr_of_values<T: Real>(values: &[Complex<T>], r: f64, cell_volume: T) -> T {
    let max = values.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if r.is_infinite() || max == T::zero() {
        return max;
    }
    let rr = T::of(r);
    let sum = values.iter().map(|z| (z.norm() / max).powf(rr)).sum::<T>();
    max * (cell_volume * sum).powf(rr.recip())
}

/// Outer `L^q_t` of sampled spatial norms.
pub fn time_norm<T: Real>(times: &[T], values: &[T], q: f64) -> T {
    if q.is_infinite() {
        return values.iter().copied().fold(T::zero(), T::max);
    }
    let qq = T::of(q);
    let max = values.iter().copied().fold(T::zero(), T::max);
    if max == T::zero() {
        return T::zero();
    }
    let integral = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * T::of(0.5) * ((v[0] / max).powf(qq) + (v[1] / max).powf(qq)))
        .sum::<T>();
    max * integral.powf(qq.recip())
}

fn check_exponent(p: f64, what: &str) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::arg(format!("{what} exponent must lie in [1, ∞], got {p}")));
    }
    Ok(())
}

fn check_trajectory<T: Real>(traj: &Trajectory<T>) -> Result<()> {
    if traj.len() < 2 {
        return Err(Error::arg(format!(
            "space-time norms need at least two time samples, got {}",
            traj.len()
        )));
    }
    Ok(())
}

/// `‖u‖_{L^q_t L^r_x}` over the sampled interval.
pub fn mixed_norm<T: Real>(traj: &Trajectory<T>, q: f64, r: f64) -> Result<T> {
    Ok(mixed_norms(traj, &[(q, r)])?[0])
}

/// Several `(q, r)` pairs with one inverse transform per sample.
pub fn mixed_norms<T: Real>(traj: &Trajectory<T>, pairs: &[(f64, f64)]) -> Result<Vec<T>> {
    check_trajectory(traj)?;
    for &(q, r) in pairs {
        check_exponent(q, "time")?;
        check_exponent(r, "space")?;
    }
    let cv = traj.grid().expect("non-empty").cell_volume();
    let rs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let spatial: Vec<Vec<T>> = traj
        .fields()
        .par_iter()
        .map(|f| {
            let phys = f.physical();
            rs.iter().map(|&r| lr_of_values(phys.values(), r, cv)).collect()
        })
        .collect();
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(j, &(q, _))| {
            let series: Vec<T> = spatial.iter().map(|row| row[j]).collect();
            time_norm(traj.times(), &series, q)
        })
        .collect())
}

/// Value of a dyadic `l²_N` norm with its per-block terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicNorm {
    pub value: f64,
    /// `(N, ‖w(N)·P_N u‖_{L^qL^r})`.
    pub blocks: Vec<(u64, f64)>,
    /// Largest block included in the sum.
    pub top_block: u64,
    /// Per-axis Nyquist frequency `πn/L`.
    pub nyquist: f64,
    /// Blocks above the per-axis Nyquist frequency (only partly resolved).
    pub clipped_blocks: usize,
}

/// Blockwise mixed norms: `result[pair][block]` for the weight `a` applied to `P_N u`.
fn block_mixed_norms<T: Real>(
    traj: &Trajectory<T>,
    weight: Derivative,
    pairs: &[(f64, f64)],
    blocks: &[u64],
) -> Result<Vec<Vec<T>>> {
    check_trajectory(traj)?;
    for &(q, r) in pairs {
        check_exponent(q, "time")?;
        check_exponent(r, "space")?;
    }
    let grid = traj.grid().expect("non-empty").clone();
    let cv = grid.cell_volume();
    let norm_sq = grid.frequency_norm_sq();
    let symbol: Vec<T> = norm_sq.iter().map(|&k2| weight.symbol(k2)).collect();
    let spectra: Vec<Field<T>> = traj.fields().par_iter().map(|f| f.frequency()).collect();
    let jobs: Vec<(usize, usize)> =
        (0..blocks.len()).flat_map(|b| (0..spectra.len()).map(move |t| (b, t))).collect();
    // spatial[b * nt + t][pair]
    let spatial: Vec<Vec<T>> = jobs
        .par_iter()
        .map(|&(b, t)| {
            let block = blocks[b];
            let field = spectra[t]
                .multiplied_real(|i| symbol[i] * lp_block(norm_sq[i].sqrt(), block))
                .into_view(View::Physical);
            pairs.iter().map(|&(_, r)| lr_of_values(field.values(), r, cv)).collect()
        })
        .collect();
    let nt = spectra.len();
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(j, &(q, _))| {
            (0..blocks.len())
                .map(|b| {
                    let series: Vec<T> = (0..nt).map(|t| spatial[b * nt + t][j]).collect();
                    time_norm(traj.times(), &series, q)
                })
                .collect()
        })
        .collect())
}

fn l2_sum<T: Real>(terms: &[T]) -> T {
    terms.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn blocks_for<T: Real>(traj: &Trajectory<T>) -> Result<(Vec<u64>, f64, usize)> {
    let grid = traj.grid().ok_or_else(|| Error::arg("empty trajectory"))?;
    let blocks = dyadic_blocks(grid);
    if blocks.len() < 2 {
        return Err(Error::arg("grid resolves fewer than two dyadic blocks"));
    }
    let nyq = grid.nyquist().as_f64();
    let clipped = blocks.iter().filter(|&&b| b as f64 > nyq).count();
    Ok((blocks, nyq, clipped))
}

/// `(Σ_N ‖a(∇) P_N u‖²_{L^q_t L^r_x})^{1/2}`, blocks up to the lattice corner.
pub fn dyadic_mixed_norm<T: Real>(traj: &Trajectory<T>, weight: Derivative, q: f64, r: f64) -> Result<DyadicNorm> {
    let (blocks, nyquist, clipped_blocks) = blocks_for(traj)?;
    let per = block_mixed_norms(traj, weight, &[(q, r)], &blocks)?.remove(0);
    Ok(DyadicNorm {
        value: l2_sum(&per).as_f64(),
        blocks: blocks.iter().copied().zip(per.iter().map(|v| v.as_f64())).collect(),
        top_block: *blocks.last().expect("non-empty"),
        nyquist,
        clipped_blocks,
    })
}

/// One named term of a composite norm.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Constituent {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Caps {
    pub top_block: u64,
    pub nyquist: f64,
    pub clipped_blocks: usize,
}

/// Sum of constituent norms, each kept for reporting.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CompositeNorm {
    pub value: f64,
    pub constituents: Vec<Constituent>,
    pub epsilon: f64,
    pub caps: Caps,
}

impl CompositeNorm {
    fn from_parts(parts: Vec<Constituent>, epsilon: f64, caps: Caps) -> Self {
        let value = parts.iter().map(|c| c.value).sum();
        Self { value, constituents: parts, epsilon, caps }
    }

    pub fn constituent(&self, label: &str) -> Option<f64> {
        self.constituents.iter().find(|c| c.label == label).map(|c| c.value)
    }

    /// Concatenates two composites (the norm of an intersection space).
    pub fn plus(mut self, other: CompositeNorm) -> Self {
        self.value += other.value;
        self.constituents.extend(other.constituents);
        self
    }
}

fn fmt_exp(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        let s = format!("{p:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(Error::arg(format!("epsilon must lie in (0, 1/3), got {eps}")));
    }
    Ok(())
}

fn block_part<T: Real>(
    traj: &Trajectory<T>,
    blocks: &[u64],
    weight: Derivative,
    pairs: &[(f64, f64)],
    tag: &str,
) -> Result<Vec<Constituent>> {
    let per = block_mixed_norms(traj, weight, pairs, blocks)?;
    Ok(pairs
        .iter()
        .zip(per)
        .map(|(&(q, r), terms)| Constituent {
            label: format!("{tag} l2N L{}t L{}x", fmt_exp(q), fmt_exp(r)),
            value: l2_sum(&terms).as_f64(),
        })
        .collect())
}

/// `Y^s(I)`: three `|∇|^s`-weighted dyadic terms, one unweighted dyadic
/// term and six whole-field mixed norms.
pub fn y_norm<T: Real>(traj: &Trajectory<T>, s: f64, epsilon: f64) -> Result<CompositeNorm> {
    check_epsilon(epsilon)?;
    let (blocks, nyquist, clipped_blocks) = blocks_for(traj)?;
    let e = epsilon;
    let mut parts = block_part(
        traj,
        &blocks,
        Derivative::Homogeneous(s),
        &[(4.0, 4.5), (6.0, 6.0), (4.0, 18.0)],
        &format!("|D|^{s}"),
    )?;
    parts.extend(block_part(traj, &blocks, Derivative::none(), &[(20.0 / 7.0, 10.0)], "1")?);
    let whole = [
        (4.0, 12.0),
        (3.0, f64::INFINITY),
        (4.0, 6.0),
        (3.0, 6.0),
        (3.0 / (1.0 - e), 6.0 / (1.0 - 3.0 * e)),
        (4.0 * (4.0 - 3.0 * e) / (5.0 + 3.0 * e), 2.0 * (4.0 - 3.0 * e) / (1.0 - 3.0 * e)),
    ];
    let vals = mixed_norms(traj, &whole)?;
    parts.extend(whole.iter().zip(vals).map(|(&(q, r), v)| Constituent {
        label: format!("L{}t L{}x", fmt_exp(q), fmt_exp(r)),
        value: v.as_f64(),
    }));
    Ok(CompositeNorm::from_parts(parts, epsilon, Caps { top_block: *blocks.last().unwrap(), nyquist, clipped_blocks }))
}

/// `Z^s(I) = ‖⟨∇⟩^{s−ε} P_N v‖_{l²L^∞L^∞} + ‖⟨∇⟩^s P_N v‖_{l²L^∞L²}`.
pub fn z_norm<T: Real>(traj: &Trajectory<T>, s: f64, epsilon: f64) -> Result<CompositeNorm> {
    check_epsilon(epsilon)?;
    let (blocks, nyquist, clipped_blocks) = blocks_for(traj)?;
    let inf = f64::INFINITY;
    let mut parts = block_part(traj, &blocks, Derivative::Inhomogeneous(s - epsilon), &[(inf, inf)], &format!("<D>^{}", s - epsilon))?;
    parts.extend(block_part(traj, &blocks, Derivative::Inhomogeneous(s), &[(inf, 2.0)], &format!("<D>^{s}"))?);
    Ok(CompositeNorm::from_parts(parts, epsilon, Caps { top_block: *blocks.last().unwrap(), nyquist, clipped_blocks }))
}

/// `Ỹ^s(I) = Y^s(I) + ‖|∇|^{s+1/2−ε} v_N‖_{l²L²_tL^∞_x}`.
pub fn y_tilde_norm<T: Real>(traj: &Trajectory<T>, s: f64, epsilon: f64) -> Result<CompositeNorm> {
    let mut y = y_norm(traj, s, epsilon)?;
    let (blocks, ..) = blocks_for(traj)?;
    let order = s + 0.5 - epsilon;
    let extra = block_part(traj, &blocks, Derivative::Homogeneous(order), &[(2.0, f64::INFINITY)], &format!("|D|^{order}"))?;
    y.value += extra.iter().map(|c| c.value).sum::<f64>();
    y.constituents.extend(extra);
    Ok(y)
}

/// `L²`-admissible pairs `2/q + d/r = d/2` used by [`x_proxy_norm`].
pub fn proxy_pairs(dim: usize) -> Vec<(f64, f64)> {
    let d = dim as f64;
    [f64::INFINITY, 8.0, 6.0, 4.0]
        .iter()
        .filter_map(|&q| {
            let r = if q.is_infinite() { 2.0 } else { 2.0 * d * q / (d * q - 4.0) };
            (r >= 2.0 && r.is_finite()).then_some((q, r))
        })
        .collect()
}

/// Lower-bound surrogate for the `X^l` working norm:
/// `(Σ_N N^{2l} max_{(q,r)} ‖P_N w‖²_{L^qL^r})^{1/2}` over [`proxy_pairs`].
///
/// This is not equivalent to the atomic `U²_Δ`-based norm; it only bounds it
/// from below up to constants.
pub fn x_proxy_norm<T: Real>(traj: &Trajectory<T>, l: f64) -> Result<CompositeNorm> {
    let (blocks, nyquist, clipped_blocks) = blocks_for(traj)?;
    let grid = traj.grid().expect("non-empty");
    let pairs = proxy_pairs(grid.dim());
    let per = block_mixed_norms(traj, Derivative::none(), &pairs, &blocks)?;
    let mut sum = 0.0;
    let mut parts = Vec::new();
    for (b, &n) in blocks.iter().enumerate() {
        let best = per.iter().map(|row| row[b].as_f64()).fold(0.0, f64::max);
        let term = (n as f64).powf(l) * best;
        sum += term * term;
        parts.push(Constituent { label: format!("N={n}"), value: term });
    }
    Ok(CompositeNorm {
        value: sum.sqrt(),
        constituents: parts,
        epsilon: 0.0,
        caps: Caps { top_block: *blocks.last().unwrap(), nyquist, clipped_blocks },
    })
}

/// `{norm name → composite}` as written to JSON.
pub type NormReport = BTreeMap<String, CompositeNorm>;

/// Evaluates the named norms (`y`, `z`, `y_tilde`, `x_proxy`) on one trajectory.
pub fn norm_report<T: Real>(traj: &Trajectory<T>, names: &[&str], s: f64, epsilon: f64) -> Result<NormReport> {
    let mut report = NormReport::new();
    for &name in names {
        let value = match name {
            "y" => y_norm(traj, s, epsilon)?,
            "z" => z_norm(traj, s, epsilon)?,
            "y_tilde" => y_tilde_norm(traj, s, epsilon)?,
            "x_proxy" => x_proxy_norm(traj, s)?,
            other => return Err(Error::arg(format!("unknown norm `{other}`"))),
        };
        report.insert(name.to_string(), value);
    }
    Ok(report)
}
