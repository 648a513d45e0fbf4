use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use super::fft::NdFft;
use crate::{Error, Real, Result};

/// Periodic box `[0, L)^dim` sampled at `n` points per axis.
///
/// Frequencies live on `(2π/L)·{-n/2, …, n/2-1}^dim`, stored in FFT order
/// (non-negative modes first). Cloning is cheap: the FFT plans and the
/// frequency tables are shared.
#[derive(Clone)]
pub struct Grid<T: Real> {
    inner: Arc<GridInner<T>>,
}

struct GridInner<T: Real> {
    dim: usize,
    n: usize,
    box_length: T,
    dx: T,
    /// `ξ` along one axis, FFT order.
    wavenumbers: Vec<T>,
    /// `|ξ|²` per flat frequency index.
    norm_sq: Vec<T>,
    fft: NdFft<T>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.n() == other.n()
                && self.box_length() == other.box_length())
    }
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, n: usize, box_length: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(box_length > T::zero()) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {box_length}")));
        }
        let dk = T::TAU() / box_length;
        let wavenumbers: Vec<T> = (0..n).map(|i| T::of(signed_mode(i, n) as f64) * dk).collect();
        let len = n.pow(dim as u32);
        let mut norm_sq = vec![T::zero(); len];
        for (flat, slot) in norm_sq.iter_mut().enumerate() {
            let mut acc = T::zero();
            let mut rest = flat;
            for _ in 0..dim {
                let k = wavenumbers[rest % n];
                acc = acc + k * k;
                rest /= n;
            }
            *slot = acc;
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                box_length,
                dx: box_length / T::of_usize(n),
                wavenumbers,
                norm_sq,
                fft: NdFft::new(n, dim),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.norm_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn box_length(&self) -> T {
        self.inner.box_length
    }

    pub fn dx(&self) -> T {
        self.inner.dx
    }

    /// Quadrature weight `dx^dim`.
    pub fn cell_volume(&self) -> T {
        self.inner.dx.powi(self.inner.dim as i32)
    }

    pub fn volume(&self) -> T {
        self.inner.box_length.powi(self.inner.dim as i32)
    }

    /// Lattice spacing `2π/L` of the frequency grid.
    pub fn frequency_spacing(&self) -> T {
        T::TAU() / self.inner.box_length
    }

    /// Largest resolved frequency per axis, `πn/L`.
    pub fn nyquist(&self) -> T {
        T::PI() * T::of_usize(self.inner.n) / self.inner.box_length
    }

    /// Largest `|ξ|` present on the lattice (a corner of the frequency cube).
    pub fn max_frequency_radius(&self) -> T {
        self.nyquist() * T::of_usize(self.inner.dim).sqrt()
    }

    /// Recurrence period `L²/(2π)` of the free flow on this box.
    pub fn recurrence_time(&self) -> T {
        self.inner.box_length * self.inner.box_length / T::TAU()
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[T] {
        &self.inner.wavenumbers
    }

    /// `|ξ|²` for every flat frequency index.
    pub fn frequency_norm_sq(&self) -> &[T] {
        &self.inner.norm_sq
    }

    /// Splits a flat row-major index into per-axis indices (axis 0 first).
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let n = self.inner.n;
        let dim = self.inner.dim;
        let mut out = [0; 3];
        let mut rest = flat;
        for axis in (0..dim).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.inner.n + i)
    }

    /// Signed mode number of an FFT-order index.
    pub fn signed_mode(&self, i: usize) -> i64 {
        signed_mode(i, self.inner.n)
    }

    /// Frequency vector of a flat index.
    pub fn frequency(&self, flat: usize) -> [T; 3] {
        let idx = self.unflatten(flat);
        let mut xi = [T::zero(); 3];
        for axis in 0..self.inner.dim {
            xi[axis] = self.inner.wavenumbers[idx[axis]];
        }
        xi
    }

    /// Physical coordinate `i·dx` of a flat index.
    pub fn position(&self, flat: usize) -> [T; 3] {
        let idx = self.unflatten(flat);
        let mut x = [T::zero(); 3];
        for axis in 0..self.inner.dim {
            x[axis] = T::of_usize(idx[axis]) * self.inner.dx;
        }
        x
    }

    /// Minimum-image coordinate of a flat index relative to the origin, in `[-L/2, L/2)`.
    pub fn centered_position(&self, flat: usize) -> [T; 3] {
        let idx = self.unflatten(flat);
        let mut x = [T::zero(); 3];
        for axis in 0..self.inner.dim {
            x[axis] = T::of(signed_mode(idx[axis], self.inner.n) as f64) * self.inner.dx;
        }
        x
    }

    /// `|x|` measured from the origin with the minimum-image convention.
    pub fn centered_radius(&self, flat: usize) -> T {
        let x = self.centered_position(flat);
        x.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt()
    }

    /// Whether a frequency survives the 2/3 dealiasing rule (`|m| ≤ n/3` on every axis).
    pub fn dealias_keeps(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        let n = self.inner.n as i64;
        idx[..self.inner.dim]
            .iter()
            .all(|&i| 3 * signed_mode(i, self.inner.n).abs() <= n)
    }

    pub(crate) fn fft_forward(&self, data: &mut [Complex<T>]) {
        self.inner.fft.process(data, false);
        self.normalize(data);
    }

    pub(crate) fn fft_inverse(&self, data: &mut [Complex<T>]) {
        self.inner.fft.process(data, true);
        self.normalize(data);
    }

    fn normalize(&self, data: &mut [Complex<T>]) {
        let scale = T::one() / T::of_usize(self.len()).sqrt();
        data.iter_mut().for_each(|z| *z = z.scale(scale));
    }
}

pub(crate) fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
