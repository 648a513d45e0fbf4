use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::{Error, Real, Result};

/// Which representation a [`Field`] currently stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Physical,
    Frequency,
}

impl View {
    pub fn tag(self) -> u8 {
        match self {
            View::Physical => 0,
            View::Frequency => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(View::Physical),
            1 => Some(View::Frequency),
            _ => None,
        }
    }
}

/// Complex scalar field on a [`Grid`], held either as point values or as
/// unitary-normalized Fourier coefficients.
///
/// Because the transform is unitary, `‖f‖²_{L²} = dx^d Σ|values|²` in either view.
#[derive(Clone, Debug)]
pub struct Field<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
    view: View,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: &Grid<T>, view: View) -> Self {
        Self { grid: grid.clone(), values: vec![Complex::zero(); grid.len()], view }
    }

    pub fn from_values(grid: &Grid<T>, values: Vec<Complex<T>>, view: View) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "expected {} values for grid, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values, view })
    }

    /// Samples `f(x)` at the grid points `x = i·dx`.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 3]) -> Complex<T>) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid: grid.clone(), values, view: View::Physical }
    }

    /// Builds a field from its Fourier coefficients `c(ξ)` (unitary normalization).
    pub fn from_spectrum(grid: &Grid<T>, c: impl Fn([T; 3]) -> Complex<T>) -> Self {
        let values = (0..grid.len()).map(|i| c(grid.frequency(i))).collect();
        Self { grid: grid.clone(), values, view: View::Frequency }
    }

    /// `amplitude · e^{ik·x}` for an integer lattice mode `k`.
    pub fn plane_wave(grid: &Grid<T>, mode: &[i64], amplitude: Complex<T>) -> Self {
        let dk = grid.frequency_spacing();
        Self::from_fn(grid, |x| {
            let phase = mode
                .iter()
                .zip(x.iter())
                .fold(T::zero(), |acc, (&m, &xj)| acc + T::of(m as f64) * dk * xj);
            amplitude * Complex::from_polar(T::one(), phase)
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Index of the first NaN/Inf entry, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite()))
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// Unitary discrete Fourier transform into `target`; rejects NaN/Inf input.
    pub fn transform(&self, target: View) -> Result<Self> {
        self.ensure_finite()?;
        Ok(self.to_view(target))
    }

    /// Converts to `target` without the finiteness check.
    pub fn to_view(&self, target: View) -> Self {
        self.clone().into_view(target)
    }

    pub fn into_view(mut self, target: View) -> Self {
        if self.view != target {
            match target {
                View::Frequency => self.grid.fft_forward(&mut self.values),
                View::Physical => self.grid.fft_inverse(&mut self.values),
            }
            self.view = target;
        }
        self
    }

    pub fn physical(&self) -> Self {
        self.to_view(View::Physical)
    }

    pub fn frequency(&self) -> Self {
        self.to_view(View::Frequency)
    }

    /// `‖f‖²_{L²}` of the box.
    pub fn norm_sq(&self) -> T {
        self.grid.cell_volume() * self.values.iter().map(|z| z.norm_sqr()).sum::<T>()
    }

    pub fn l2_norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z = *z * c);
        out
    }

    /// `a·self + b·other`, returned in `self`'s view.
    pub fn lin_comb(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        self.check_grid(other)?;
        let other = other.to_view(self.view);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x * a + y * b)
            .collect();
        Ok(Self { grid: self.grid.clone(), values, view: self.view })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(Complex::from(T::one()), other, Complex::from(T::one()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(Complex::from(T::one()), other, Complex::from(-T::one()))
    }

    /// `‖self − other‖_{L²}`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.l2_norm())
    }

    /// Largest pointwise deviation in physical space.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_grid(other)?;
        let a = self.physical();
        let b = other.physical();
        Ok(a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (*x - *y).norm())
            .fold(T::zero(), T::max))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Complex conjugate `f̄`, returned in the same view.
    pub fn conj(&self) -> Self {
        match self.view {
            View::Physical => {
                let values = self.values.iter().map(|z| z.conj()).collect();
                Self { grid: self.grid.clone(), values, view: View::Physical }
            }
            View::Frequency => {
                // (f̄)^(ξ) = conj(f̂(−ξ))
                let n = self.grid.n();
                let dim = self.grid.dim();
                let mut values = vec![Complex::zero(); self.values.len()];
                for (flat, slot) in values.iter_mut().enumerate() {
                    let idx = self.grid.unflatten(flat);
                    let mut refl = [0usize; 3];
                    for a in 0..dim {
                        refl[a] = (n - idx[a]) % n;
                    }
                    *slot = self.values[self.grid.flatten(&refl[..dim])].conj();
                }
                Self { grid: self.grid.clone(), values, view: View::Frequency }
            }
        }
    }

    /// Applies the Fourier multiplier `m(flat index)` and returns the result in frequency view.
    pub fn multiplied(&self, m: impl Fn(usize) -> Complex<T>) -> Self {
        let mut out = self.frequency();
        out.values.iter_mut().enumerate().for_each(|(i, z)| *z = *z * m(i));
        out
    }

    /// Same as [`Field::multiplied`] for a real multiplier.
    pub fn multiplied_real(&self, m: impl Fn(usize) -> T) -> Self {
        let mut out = self.frequency();
        out.values.iter_mut().enumerate().for_each(|(i, z)| *z = z.scale(m(i)));
        out
    }

    /// Periodic translation by whole grid cells, `f(x − shift·dx)`.
    pub fn shifted(&self, shift: &[i64]) -> Self {
        let src = self.physical();
        let n = self.grid.n() as i64;
        let dim = self.grid.dim();
        let mut values = vec![Complex::zero(); src.values.len()];
        for (flat, &z) in src.values.iter().enumerate() {
            let idx = self.grid.unflatten(flat);
            let mut dst = [0usize; 3];
            for a in 0..dim {
                dst[a] = (idx[a] as i64 + shift.get(a).copied().unwrap_or(0)).rem_euclid(n) as usize;
            }
            values[self.grid.flatten(&dst[..dim])] = z;
        }
        Self { grid: self.grid.clone(), values, view: View::Physical }
    }

    /// Complex `L²` inner product `∫ f ḡ dx`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_grid(other)?;
        let other = other.to_view(self.view);
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(Complex::zero(), |acc: Complex<T>, (x, y)| acc + *x * y.conj());
        Ok(s.scale(self.grid.cell_volume()))
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
