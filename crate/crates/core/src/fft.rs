//! Spectral transforms over the grid axes, built on rustfft.
//!
//! Forward and inverse transforms are unnormalized; the evolver folds the
//! 1/N round-trip factor into its kinetic phase table.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::exec;
use crate::grid::GridSpec;

pub(crate) struct SpectralPlan {
    n: usize,
    dims: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Rows handed to one worker at a time; amortizes task overhead.
const ROWS_PER_TASK: usize = 8;

impl SpectralPlan {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points_per_dim();
        Self {
            n,
            dims: grid.dims(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.all_axes(data, true);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.all_axes(data, false);
    }

    fn all_axes(&self, data: &mut [C64], forward: bool) {
        let fft = if forward { &self.fwd } else { &self.inv };
        debug_assert_eq!(data.len(), self.n.pow(self.dims as u32));
        // contiguous axis (axis dims-1)
        self.rows(data, fft);
        if self.dims == 2 {
            // strided axis via transpose
            let mut t = vec![C64::new(0.0, 0.0); data.len()];
            transpose(data, &mut t, self.n);
            self.rows(&mut t, fft);
            transpose(&t, data, self.n);
        }
    }

    fn rows(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        exec::chunks_mut_with(
            data,
            n * ROWS_PER_TASK,
            || vec![C64::new(0.0, 0.0); scratch_len],
            |scratch, chunk| {
                for row in chunk.chunks_mut(n) {
                    fft.process_with_scratch(row, scratch);
                }
            },
        );
    }
}

// Plain blocked transpose; cost is negligible next to the FFTs.
fn transpose(src: &[C64], dst: &mut [C64], n: usize) {
    debug_assert_eq!(src.len(), n * n);
    debug_assert_eq!(dst.len(), n * n);
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// Angular wavenumbers in FFT bin order: k[m] = (π/L)·m for m < n/2,
/// then the negative branch.
pub(crate) fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let base = std::f64::consts::PI / extent;
    (0..n)
        .map(|m| {
            let signed = if m < n / 2 {
                m as i64
            } else {
                m as i64 - n as i64
            };
            base * signed as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_recovers_input_scaled() {
        let grid = GridSpec::new(2, 16, 1.0).unwrap();
        let plan = SpectralPlan::new(&grid);
        let n_total = grid.total_points();
        let orig: Vec<C64> = (0..n_total)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        plan.forward(&mut data);
        plan.inverse(&mut data);
        let scale = n_total as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_isolates_plane_wave_bin() {
        let grid = GridSpec::new(1, 64, 2.0).unwrap();
        let plan = SpectralPlan::new(&grid);
        let ks = wavenumbers(64, 2.0);
        let mode = 5usize;
        let mut data: Vec<C64> = (0..64)
            .map(|i| (C64::new(0.0, 1.0) * ks[mode] * grid.coord(i)).exp())
            .collect();
        plan.forward(&mut data);
        for (m, v) in data.iter().enumerate() {
            if m == mode {
                assert!((v.norm() - 64.0).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9, "leakage in bin {m}: {}", v.norm());
            }
        }
    }

    #[test]
    fn wavenumber_ordering() {
        let ks = wavenumbers(8, std::f64::consts::PI);
        assert_eq!(ks[0], 0.0);
        assert_eq!(ks[1], 1.0);
        assert_eq!(ks[3], 3.0);
        assert_eq!(ks[4], -4.0);
        assert_eq!(ks[7], -1.0);
    }
}
