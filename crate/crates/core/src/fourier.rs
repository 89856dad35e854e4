//! Unitary multi-axis DFT over one electronic block.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::registers::RegisterLayout;

#[derive(Clone)]
pub(crate) struct GridFft {
    n: usize,
    axes: usize,
    block: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft")
            .field("n", &self.n)
            .field("axes", &self.axes)
            .finish()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

impl GridFft {
    pub(crate) fn new(layout: &RegisterLayout) -> Self {
        let n = layout.points_per_direction();
        let mut planner = FftPlanner::new();
        Self {
            n,
            axes: layout.axis_count(),
            block: layout.electronic_dim(),
            scale: 1.0 / (layout.electronic_dim() as f64).sqrt(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn block_len(&self) -> usize {
        self.block
    }

    /// Position basis to momentum basis (FFT frequency order per axis).
    pub(crate) fn forward(&self, block: &mut [Complex64], work: &mut Vec<Complex64>) {
        self.transform(block, work, Direction::Forward);
    }

    pub(crate) fn inverse(&self, block: &mut [Complex64], work: &mut Vec<Complex64>) {
        self.transform(block, work, Direction::Inverse);
    }

    fn transform(&self, block: &mut [Complex64], work: &mut Vec<Complex64>, dir: Direction) {
        debug_assert_eq!(block.len(), self.block);
        let fft = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let n = self.n;
        work.resize(self.block, Complex64::new(0.0, 0.0));
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.axes {
            let stride = n.pow(axis as u32);
            if stride == 1 {
                fft.process_with_scratch(block, &mut scratch);
                continue;
            }
            // Gather strided lines into contiguous rows, transform, scatter.
            let outer = self.block / (stride * n);
            let mut row = 0;
            for o in 0..outer {
                let base = o * stride * n;
                for i in 0..stride {
                    let dst = &mut work[row * n..(row + 1) * n];
                    for (m, d) in dst.iter_mut().enumerate() {
                        *d = block[base + m * stride + i];
                    }
                    row += 1;
                }
            }
            fft.process_with_scratch(&mut work[..], &mut scratch);
            let mut row = 0;
            for o in 0..outer {
                let base = o * stride * n;
                for i in 0..stride {
                    let src = &work[row * n..(row + 1) * n];
                    for (m, s) in src.iter().enumerate() {
                        block[base + m * stride + i] = *s;
                    }
                    row += 1;
                }
            }
        }
        for a in block.iter_mut() {
            *a *= self.scale;
        }
    }
}
