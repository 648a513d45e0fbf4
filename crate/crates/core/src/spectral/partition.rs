use num_complex::Complex;
use num_traits::Zero;

use super::cutoff::unit_bump;
use super::{Field, Grid, Projected, View};
use crate::{Error, Real, Result};

/// Normalized 1-D profile `ψ(r) = h(r) / Σ_m h(r − m)`.
pub fn partition_profile<T: Real>(r: T) -> T {
    let base = r.floor();
    let mut denom = T::zero();
    for off in -1..=2 {
        denom = denom + unit_bump(r - (base + T::of(off as f64)));
    }
    unit_bump(r) / denom
}

/// `ψ_0(ξ) = Π_j ψ(ξ_j)`: the unit-cube weight centred at the origin.
pub fn psi0<T: Real>(xi: &[T]) -> T {
    xi.iter().fold(T::one(), |acc, &x| acc * partition_profile(x))
}

#[derive(Clone, Copy, Debug)]
struct AxisCover<T> {
    cubes: [i64; 2],
    weights: [T; 2],
    len: usize,
}

/// Smooth partition of unity `{ψ_k}_{k∈ℤ^d}` evaluated on a grid's frequency lattice.
///
/// `ψ_k(ξ) = ψ_0(ξ − k)` is a tensor product, so every lattice frequency is
/// covered by at most two cubes per axis; the table stores those per axis.
#[derive(Clone, Debug)]
pub struct UnitPartition<T: Real> {
    grid: Grid<T>,
    covers: Vec<AxisCover<T>>,
    k_min: i64,
    k_max: i64,
}

impl<T: Real> UnitPartition<T> {
    pub fn new(grid: &Grid<T>) -> Result<Self> {
        if grid.frequency_spacing() > T::one() {
            return Err(Error::arg(format!(
                "frequency spacing 2π/L = {} exceeds 1; unit cubes are not resolved (need L ≥ 2π)",
                grid.frequency_spacing()
            )));
        }
        let mut k_min = i64::MAX;
        let mut k_max = i64::MIN;
        let covers: Vec<AxisCover<T>> = grid
            .wavenumbers()
            .iter()
            .map(|&xi| {
                let base = xi.floor().to_i64().unwrap_or(0);
                let mut cover = AxisCover { cubes: [0; 2], weights: [T::zero(); 2], len: 0 };
                for k in base - 1..=base + 2 {
                    let w = partition_profile(xi - T::of(k as f64));
                    if w > T::zero() {
                        assert!(cover.len < 2, "a frequency lies in at most two unit intervals");
                        cover.cubes[cover.len] = k;
                        cover.weights[cover.len] = w;
                        cover.len += 1;
                        k_min = k_min.min(k);
                        k_max = k_max.max(k);
                    }
                }
                cover
            })
            .collect();
        Ok(Self { grid: grid.clone(), covers, k_min, k_max })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Inclusive range of cube indices (per axis) that touch the lattice.
    pub fn cube_range(&self) -> (i64, i64) {
        (self.k_min, self.k_max)
    }

    /// Number of cube indices per axis.
    pub fn span(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    /// Total number of cubes touching the lattice.
    pub fn cube_count(&self) -> usize {
        self.span().pow(self.grid.dim() as u32)
    }

    /// Dense index of a cube inside the `span^dim` table, or `None` if out of range.
    pub fn cube_slot(&self, k: &[i64]) -> Option<usize> {
        let span = self.span() as i64;
        let mut slot = 0i64;
        for &kj in k.iter().take(self.grid.dim()) {
            if kj < self.k_min || kj > self.k_max {
                return None;
            }
            slot = slot * span + (kj - self.k_min);
        }
        Some(slot as usize)
    }

    /// Inverse of [`UnitPartition::cube_slot`].
    pub fn cube_at(&self, slot: usize) -> [i64; 3] {
        let span = self.span();
        let mut k = [0i64; 3];
        let mut rest = slot;
        for axis in (0..self.grid.dim()).rev() {
            k[axis] = (rest % span) as i64 + self.k_min;
            rest /= span;
        }
        k
    }

    /// `ψ_k(ξ)` at a lattice frequency.
    pub fn weight(&self, k: &[i64], flat: usize) -> T {
        let idx = self.grid.unflatten(flat);
        let mut w = T::one();
        for axis in 0..self.grid.dim() {
            let cover = &self.covers[idx[axis]];
            let kj = k.get(axis).copied().unwrap_or(0);
            let found = (0..cover.len).find(|&c| cover.cubes[c] == kj);
            match found {
                Some(c) => w = w * cover.weights[c],
                None => return T::zero(),
            }
        }
        w
    }

    /// Calls `visit(slot, ψ_k(ξ))` for every cube covering the lattice frequency `flat`.
    pub fn for_each_cover(&self, flat: usize, mut visit: impl FnMut(usize, T)) {
        let dim = self.grid.dim();
        let idx = self.grid.unflatten(flat);
        let axes: [&AxisCover<T>; 3] = [
            &self.covers[idx[0]],
            &self.covers[idx[1.min(dim - 1)]],
            &self.covers[idx[2.min(dim - 1)]],
        ];
        let span = self.span();
        let lens = [axes[0].len, if dim > 1 { axes[1].len } else { 1 }, if dim > 2 { axes[2].len } else { 1 }];
        for a in 0..lens[0] {
            for b in 0..lens[1] {
                for c in 0..lens[2] {
                    let choice = [a, b, c];
                    let mut slot = 0usize;
                    let mut w = T::one();
                    for axis in 0..dim {
                        let cov = axes[axis];
                        slot = slot * span + (cov.cubes[choice[axis]] - self.k_min) as usize;
                        w = w * cov.weights[choice[axis]];
                    }
                    visit(slot, w);
                }
            }
        }
    }

    /// `Σ_k ψ_k(ξ)` at a lattice frequency.
    pub fn coverage(&self, flat: usize) -> T {
        let mut s = T::zero();
        self.for_each_cover(flat, |_, w| s = s + w);
        s
    }

    /// `max_ξ |Σ_k ψ_k(ξ) − 1|` over the whole lattice.
    pub fn partition_defect(&self) -> T {
        (0..self.grid.len())
            .map(|i| (self.coverage(i) - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// `□_k f = F⁻¹(ψ_k F f)`. Out-of-range `k` yields the zero field with `clipped` set.
    pub fn cube_project(&self, field: &Field<T>, k: &[i64]) -> Result<Projected<T>> {
        self.check(field)?;
        if self.cube_slot(k).is_none() {
            return Ok(Projected { field: Field::zeros(&self.grid, View::Frequency), clipped: true });
        }
        let field = field.multiplied_real(|i| self.weight(k, i));
        Ok(Projected { field, clipped: false })
    }

    /// `Σ_k □_k f`, accumulated on the frequency side.
    pub fn cube_sum(&self, field: &Field<T>) -> Result<Field<T>> {
        self.check(field)?;
        Ok(field.multiplied_real(|i| self.coverage(i)))
    }

    /// `Σ_k ‖□_k f‖²_{L²}`.
    pub fn cube_energy_sum(&self, field: &Field<T>) -> Result<T> {
        self.check(field)?;
        let spec = field.frequency();
        let mut total = T::zero();
        for (i, z) in spec.values().iter().enumerate() {
            let mut sq = T::zero();
            self.for_each_cover(i, |_, w| sq = sq + w * w);
            total = total + z.norm_sqr() * sq;
        }
        Ok(total * self.grid.cell_volume())
    }

    /// Cube slots whose projection of `field` is not identically zero.
    pub fn active_cubes(&self, field: &Field<T>) -> Result<Vec<usize>> {
        self.check(field)?;
        let spec = field.frequency();
        let mut active = vec![false; self.cube_count()];
        for (i, z) in spec.values().iter().enumerate() {
            if z.is_zero() {
                continue;
            }
            self.for_each_cover(i, |slot, w| {
                if w > T::zero() {
                    active[slot] = true;
                }
            });
        }
        Ok(active.iter().enumerate().filter(|(_, &a)| a).map(|(s, _)| s).collect())
    }

    /// `□_k f` returned in physical view, for a dense cube slot.
    pub fn cube_piece(&self, spectrum: &Field<T>, slot: usize) -> Field<T> {
        let k = self.cube_at(slot);
        let mut values = vec![Complex::zero(); self.grid.len()];
        let spec = spectrum.values();
        for (i, v) in values.iter_mut().enumerate() {
            let w = self.weight(&k[..self.grid.dim()], i);
            if w > T::zero() {
                *v = spec[i].scale(w);
            }
        }
        Field::from_values(&self.grid, values, View::Frequency)
            .expect("length matches grid")
            .into_view(View::Physical)
    }

    fn check(&self, field: &Field<T>) -> Result<()> {
        if field.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
