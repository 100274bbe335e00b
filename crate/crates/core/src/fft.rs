//! Zero-padded 2D linear convolution with a fixed, point-symmetric stencil.
//!
//! Rows go through a real-to-complex transform, columns through a complex
//! transform of the padded length. The padding guarantees that circular
//! wrap-around never reaches an output cell inside the original grid.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest 5-smooth integer `>= n`.
pub(crate) fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub(crate) struct FftConvolver {
    nx: usize,
    ny: usize,
    px: usize,
    py: usize,
    /// Number of complex bins per row after the real transform.
    bins: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Kernel spectrum, column-major: `bins` columns of length `py`, pre-scaled by `1/(px*py)`.
    kernel_hat: Vec<Complex64>,
}

impl FftConvolver {
    /// `stencil` is a dense `(2*kx+1) x (2*ky+1)` block, x fastest.
    pub(crate) fn new(nx: usize, ny: usize, kx: usize, ky: usize, stencil: &[f64]) -> Self {
        let px = next_fast_len(nx + kx);
        let py = next_fast_len(ny + ky);
        let bins = px / 2 + 1;
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let mut conv = Self {
            nx,
            ny,
            px,
            py,
            bins,
            r2c: real_planner.plan_fft_forward(px),
            c2r: real_planner.plan_fft_inverse(px),
            col_fwd: planner.plan_fft_forward(py),
            col_inv: planner.plan_fft_inverse(py),
            kernel_hat: Vec::new(),
        };

        let width = 2 * kx + 1;
        let mut wrapped = vec![0.0; px * py];
        for (row, dy) in (-(ky as isize)..=ky as isize).enumerate() {
            let jy = dy.rem_euclid(py as isize) as usize;
            for (col, dx) in (-(kx as isize)..=kx as isize).enumerate() {
                let ix = dx.rem_euclid(px as isize) as usize;
                wrapped[jy * px + ix] = stencil[row * width + col];
            }
        }
        let scale = 1.0 / (px * py) as f64;
        let mut hat = conv.forward(&mut wrapped, py);
        hat.iter_mut().for_each(|c| *c *= scale);
        conv.kernel_hat = hat;
        conv
    }

    pub(crate) fn padded_shape(&self) -> (usize, usize) {
        (self.px, self.py)
    }

    /// Transforms `rows` padded rows of `input` (each `px` long); returns the
    /// column-major spectrum (`bins` columns of length `py`).
    fn forward(&self, input: &mut [f64], rows: usize) -> Vec<Complex64> {
        let (px, py, bins) = (self.px, self.py, self.bins);
        let mut row_spec = vec![Complex64::new(0.0, 0.0); rows * bins];
        input[..rows * px]
            .par_chunks_mut(px)
            .zip(row_spec.par_chunks_mut(bins))
            .for_each_init(
                || self.r2c.make_scratch_vec(),
                |scratch, (inp, out)| {
                    self.r2c
                        .process_with_scratch(inp, out, scratch)
                        .expect("row buffers sized by plan");
                },
            );

        let mut cols = vec![Complex64::new(0.0, 0.0); bins * py];
        cols.par_chunks_mut(py).enumerate().for_each_init(
            || vec![Complex64::new(0.0, 0.0); self.col_fwd.get_inplace_scratch_len()],
            |scratch, (k, col)| {
                for j in 0..rows {
                    col[j] = row_spec[j * bins + k];
                }
                self.col_fwd.process_with_scratch(col, scratch);
            },
        );
        cols
    }

    /// Linear convolution of `z` (nx*ny, row-major) with the stencil, restricted to the grid.
    pub(crate) fn convolve(&self, z: &[f64]) -> Vec<f64> {
        let (nx, ny, px, py, bins) = (self.nx, self.ny, self.px, self.py, self.bins);
        let mut padded = vec![0.0; ny * px];
        for (dst, src) in padded.chunks_mut(px).zip(z.chunks(nx)) {
            dst[..nx].copy_from_slice(src);
        }
        let mut cols = self.forward(&mut padded, ny);

        cols.par_chunks_mut(py)
            .zip(self.kernel_hat.par_chunks(py))
            .for_each_init(
                || vec![Complex64::new(0.0, 0.0); self.col_inv.get_inplace_scratch_len()],
                |scratch, (col, khat)| {
                    for (c, k) in col.iter_mut().zip(khat) {
                        *c *= k;
                    }
                    self.col_inv.process_with_scratch(col, scratch);
                },
            );

        let mut out = vec![0.0; nx * ny];
        out.par_chunks_mut(nx).enumerate().for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); bins],
                    vec![0.0; px],
                    self.c2r.make_scratch_vec(),
                )
            },
            |(spec, real, scratch), (j, dst)| {
                for k in 0..bins {
                    spec[k] = cols[k * py + j];
                }
                // The input is real, so these bins are real up to roundoff.
                spec[0].im = 0.0;
                if px % 2 == 0 {
                    spec[bins - 1].im = 0.0;
                }
                self.c2r
                    .process_with_scratch(spec, real, scratch)
                    .expect("row buffers sized by plan");
                dst.copy_from_slice(&real[..nx]);
            },
        );
        out
    }
}
