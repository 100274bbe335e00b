//! Discrete dispersal kernels and the nonlocal operator
//! `(Γz)(x) = Σ_{y∈Ω} φ(x,y) (z(y) − z(x)) hx hy`.
//!
//! The kernel is translation invariant and stored as a dense stencil of
//! quadrature weights (density times cell area). Near the boundary the
//! stencil is clipped to the domain without renormalization, so the mass
//! `m(x) = Σ_{y∈Ω} φ(x,y) hx hy` drops below its interior value there.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SetupError;
use crate::fft::FftConvolver;
use crate::grid::{Field, GridSpec};

/// Default truncation radius in units of sigma.
pub const DEFAULT_CUTOFF_RADII: f64 = 4.0;

/// Stencils with more nonzero offsets than this go through the FFT path when
/// the caller asks for [`NonlocalMethod::Auto`].
const AUTO_FFT_THRESHOLD: usize = 121;

/// Truncated isotropic Gaussian kernel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub sigma: f64,
    pub cutoff_radii: f64,
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            sigma,
            cutoff_radii: DEFAULT_CUTOFF_RADII,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.sigma * self.cutoff_radii
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SetupError::NonPositiveSigma(self.sigma));
        }
        if !(self.cutoff_radii >= 1.0 && self.cutoff_radii.is_finite()) {
            return Err(SetupError::CutoffTooSmall(self.cutoff_radii));
        }
        Ok(())
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::gaussian(1.0)
    }
}

/// 2D Gaussian density `(2πσ²)^-1 exp(−r²/(2σ²))` at squared distance `r2`.
pub fn gaussian_density(sigma: f64, r2: f64) -> f64 {
    (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
}

/// How to evaluate the convolution inside the nonlocal operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlocalMethod {
    Direct,
    Fft,
    #[default]
    Auto,
}

/// Quadrature weights of a symmetric nonnegative kernel on a specific grid.
pub struct DiscreteKernel {
    grid: GridSpec,
    kx: usize,
    ky: usize,
    stencil: Vec<f64>,
    nonzero: usize,
    boundary_mass: Field,
    lambda_disc: f64,
    fft: OnceLock<FftConvolver>,
}

impl fmt::Debug for DiscreteKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteKernel")
            .field("grid", &self.grid)
            .field("half_widths", &(self.kx, self.ky))
            .field("nonzero", &self.nonzero)
            .field("lambda_disc", &self.lambda_disc)
            .finish_non_exhaustive()
    }
}

impl DiscreteKernel {
    /// Samples the truncated Gaussian on `grid`.
    pub fn gaussian(grid: &GridSpec, spec: &KernelSpec) -> Result<Self, SetupError> {
        spec.validate()?;
        let cutoff = spec.cutoff();
        let extent = grid.lx().min(grid.ly());
        if cutoff > extent {
            return Err(SetupError::StencilWiderThanDomain {
                radius: cutoff,
                extent,
            });
        }
        // Offsets past n-1 can never connect two cells of the grid.
        let kx = half_width(cutoff, grid.hx()).min(grid.nx() - 1);
        let ky = half_width(cutoff, grid.hy()).min(grid.ny() - 1);
        let cutoff2 = cutoff * cutoff * (1.0 + 1e-12);
        let area = grid.cell_area();
        let width = 2 * kx + 1;
        let mut stencil = vec![0.0; width * (2 * ky + 1)];
        for (row, dy) in (-(ky as isize)..=ky as isize).enumerate() {
            let ry = dy as f64 * grid.hy();
            for (col, dx) in (-(kx as isize)..=kx as isize).enumerate() {
                let rx = dx as f64 * grid.hx();
                let r2 = rx * rx + ry * ry;
                if r2 <= cutoff2 {
                    stencil[row * width + col] = gaussian_density(spec.sigma, r2) * area;
                }
            }
        }
        Self::from_stencil(grid, kx, ky, stencil)
    }

    /// Wraps an arbitrary dense stencil of half widths `(kx, ky)`, x fastest.
    ///
    /// Weights must be finite, nonnegative and point symmetric
    /// (`w(dx, dy) == w(-dx, -dy)`).
    pub fn from_stencil(
        grid: &GridSpec,
        kx: usize,
        ky: usize,
        stencil: Vec<f64>,
    ) -> Result<Self, SetupError> {
        let width = 2 * kx + 1;
        if stencil.len() != width * (2 * ky + 1) {
            return Err(SetupError::FieldLength {
                expected: width * (2 * ky + 1),
                got: stencil.len(),
            });
        }
        if kx >= grid.nx() || ky >= grid.ny() {
            return Err(SetupError::StencilWiderThanDomain {
                radius: (kx as f64 * grid.hx()).max(ky as f64 * grid.hy()),
                extent: grid.lx().min(grid.ly()),
            });
        }
        let at = |dx: isize, dy: isize| {
            stencil[(dy + ky as isize) as usize * width + (dx + kx as isize) as usize]
        };
        for dy in -(ky as isize)..=ky as isize {
            for dx in -(kx as isize)..=kx as isize {
                let w = at(dx, dy);
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(SetupError::BadStencilWeight { dx, dy, weight: w });
                }
                if w != at(-dx, -dy) {
                    return Err(SetupError::AsymmetricStencil { dx, dy });
                }
            }
        }
        let nonzero = stencil.iter().filter(|&&w| w != 0.0).count();
        let boundary_mass = clipped_mass(grid, kx, ky, &stencil);
        let lambda_disc = boundary_mass.max();
        Ok(Self {
            grid: *grid,
            kx,
            ky,
            stencil,
            nonzero,
            boundary_mass,
            lambda_disc,
            fft: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Half widths `(kx, ky)` of the dense stencil block.
    pub fn half_widths(&self) -> (usize, usize) {
        (self.kx, self.ky)
    }

    /// Number of offsets with a nonzero weight.
    pub fn nonzero_weights(&self) -> usize {
        self.nonzero
    }

    /// Quadrature weight for offset `(dx, dy)`, zero outside the block.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        if dx.unsigned_abs() > self.kx || dy.unsigned_abs() > self.ky {
            return 0.0;
        }
        self.stencil[(dy + self.ky as isize) as usize * (2 * self.kx + 1)
            + (dx + self.kx as isize) as usize]
    }

    pub fn stencil(&self) -> &[f64] {
        &self.stencil
    }

    /// `m(x)`: kernel mass that lands inside the domain, per cell.
    pub fn boundary_mass(&self) -> &Field {
        &self.boundary_mass
    }

    /// `max_x m(x)`, the discrete analogue of the kernel-mass bound λ.
    pub fn lambda_disc(&self) -> f64 {
        self.lambda_disc
    }

    /// Padded transform size used by the FFT path.
    pub fn fft_shape(&self) -> (usize, usize) {
        self.convolver().padded_shape()
    }

    fn convolver(&self) -> &FftConvolver {
        self.fft.get_or_init(|| {
            FftConvolver::new(
                self.grid.nx(),
                self.grid.ny(),
                self.kx,
                self.ky,
                &self.stencil,
            )
        })
    }

    fn check_grid(&self, z: &Field) -> Result<(), SetupError> {
        if *z.grid() == self.grid {
            Ok(())
        } else {
            Err(SetupError::GridMismatch)
        }
    }

    pub fn resolve(&self, method: NonlocalMethod) -> NonlocalMethod {
        match method {
            NonlocalMethod::Auto if self.nonzero > AUTO_FFT_THRESHOLD => NonlocalMethod::Fft,
            NonlocalMethod::Auto => NonlocalMethod::Direct,
            m => m,
        }
    }

    pub fn apply(&self, z: &Field, method: NonlocalMethod) -> Result<Field, SetupError> {
        match self.resolve(method) {
            NonlocalMethod::Fft => self.apply_fft(z),
            _ => self.apply_direct(z),
        }
    }

    /// Γz by explicit summation of `w (z(y) − z(x))` over the clipped stencil.
    pub fn apply_direct(&self, z: &Field) -> Result<Field, SetupError> {
        self.check_grid(z)?;
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (kx, ky) = (self.kx as isize, self.ky as isize);
        let width = 2 * self.kx + 1;
        let zv = z.values();
        let mut out = vec![0.0; nx * ny];
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            let j = j as isize;
            let dy_lo = (-ky).max(-j);
            let dy_hi = ky.min(ny as isize - 1 - j);
            for (i, cell) in row.iter_mut().enumerate() {
                let i = i as isize;
                let zc = zv[(j as usize) * nx + i as usize];
                let dx_lo = (-kx).max(-i);
                let dx_hi = kx.min(nx as isize - 1 - i);
                let mut acc = 0.0;
                for dy in dy_lo..=dy_hi {
                    let srow = &self.stencil[(dy + ky) as usize * width..][..width];
                    let zrow = &zv[((j + dy) as usize) * nx..][..nx];
                    for dx in dx_lo..=dx_hi {
                        acc += srow[(dx + kx) as usize] * (zrow[(i + dx) as usize] - zc);
                    }
                }
                *cell = acc;
            }
        });
        Ok(Field::from_vec_unchecked(self.grid, out))
    }

    /// Γz as `(φ★z) − z·m`, with the convolution done by zero-padded FFT.
    pub fn apply_fft(&self, z: &Field) -> Result<Field, SetupError> {
        self.check_grid(z)?;
        let mut conv = self.convolver().convolve(z.values());
        for ((c, &zx), &m) in conv
            .iter_mut()
            .zip(z.values())
            .zip(self.boundary_mass.values())
        {
            *c -= zx * m;
        }
        Ok(Field::from_vec_unchecked(self.grid, conv))
    }

    /// `Σ_x (Γz)(x) hx hy`; vanishes up to roundoff because the stencil is symmetric.
    pub fn integral_of_gamma(&self, z: &Field) -> Result<f64, SetupError> {
        Ok(self.apply_direct(z)?.integral())
    }
}

/// `ceil(cutoff / h)` with a guard against roundoff pushing exact ratios up.
fn half_width(cutoff: f64, h: f64) -> usize {
    (cutoff / h - 1e-9).ceil().max(0.0) as usize
}

/// Per-cell sum of the stencil weights whose target cell lies inside the grid.
fn clipped_mass(grid: &GridSpec, kx: usize, ky: usize, stencil: &[f64]) -> Field {
    let width = 2 * kx + 1;
    // prefix[row][c] = sum of stencil[row][0..c]
    let prefix: Vec<Vec<f64>> = stencil
        .chunks(width)
        .map(|row| {
            let mut p = Vec::with_capacity(width + 1);
            p.push(0.0);
            let mut s = 0.0;
            for &w in row {
                s += w;
                p.push(s);
            }
            p
        })
        .collect();
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let (kx, ky) = (kx as isize, ky as isize);
    Field::from_index_fn(*grid, |i, j| {
        let (i, j) = (i as isize, j as isize);
        let c_lo = ((-kx).max(-i) + kx) as usize;
        let c_hi = (kx.min(nx - 1 - i) + kx) as usize + 1;
        let dy_lo = (-ky).max(-j);
        let dy_hi = ky.min(ny - 1 - j);
        (dy_lo..=dy_hi)
            .map(|dy| {
                let p = &prefix[(dy + ky) as usize];
                p[c_hi] - p[c_lo]
            })
            .sum()
    })
}

/// Convenience wrapper for [`DiscreteKernel::gaussian`].
pub fn build_kernel(grid: &GridSpec, spec: &KernelSpec) -> Result<DiscreteKernel, SetupError> {
    DiscreteKernel::gaussian(grid, spec)
}

pub fn apply_nonlocal_direct(k: &DiscreteKernel, z: &Field) -> Result<Field, SetupError> {
    k.apply_direct(z)
}

pub fn apply_nonlocal_fft(k: &DiscreteKernel, z: &Field) -> Result<Field, SetupError> {
    k.apply_fft(z)
}

pub fn integral_of_gamma(k: &DiscreteKernel, z: &Field) -> Result<f64, SetupError> {
    k.integral_of_gamma(z)
}
