use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::Real;

/// Unnormalized separable FFT over a `dim`-dimensional cube of side `n`,
/// row-major storage. Lines along each axis are transformed in parallel;
/// every line is independent, so results do not depend on the thread count.
#[derive(Clone)]
pub(crate) struct NdFft<T: Real> {
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for NdFft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NdFft").field("n", &self.n).field("dim", &self.dim).finish()
    }
}

impl<T: Real> NdFft<T> {
    pub(crate) fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            dim,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub(crate) fn process(&self, data: &mut [Complex<T>], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        let plan = if inverse { &self.inv } else { &self.fwd };
        for axis in 0..self.dim {
            self.transform_axis(data, axis, plan);
        }
    }

    fn transform_axis(&self, data: &mut [Complex<T>], axis: usize, plan: &Arc<dyn Fft<T>>) {
        let n = self.n;
        let scratch_len = plan.get_inplace_scratch_len();
        let stride = n.pow((self.dim - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(n).for_each_init(
                || vec![Complex::zero(); scratch_len],
                |scratch, line| plan.process_with_scratch(line, scratch),
            );
            return;
        }
        // Strided axis: gather lines contiguously, transform, scatter back.
        let block = n * stride;
        let mut lines = vec![Complex::<T>::zero(); data.len()];
        {
            let src: &[Complex<T>] = data;
            lines.par_chunks_mut(n).enumerate().for_each(|(li, line)| {
                let base = (li / stride) * block + li % stride;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = src[base + i * stride];
                }
            });
        }
        lines.par_chunks_mut(n).for_each_init(
            || vec![Complex::zero(); scratch_len],
            |scratch, line| plan.process_with_scratch(line, scratch),
        );
        let lines = &lines;
        data.par_chunks_mut(stride).enumerate().for_each(|(ri, row)| {
            let outer = ri / n;
            let i = ri % n;
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = lines[(outer * stride + j) * n + i];
            }
        });
    }
}
