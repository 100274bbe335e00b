//! Cell-centered rectangular grids and the scalar fields that live on them.
//!
//! Cells are indexed `(i, j)` with `i` along x and `j` along y. Storage is
//! row-major with x fastest: cell `(i, j)` lives at `j * nx + i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::SetupError;

/// Uniform cell-centered discretization of `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, SetupError> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(SetupError::NonPositiveExtent { lx, ly });
        }
        if nx < 3 || ny < 3 {
            return Err(SetupError::TooFewCells { nx, ny });
        }
        Ok(Self {
            lx,
            ly,
            nx,
            ny,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area of one cell.
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Area of the whole domain, `|Ω|`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx
    }

    #[inline]
    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy
    }

    /// True when the cells are square to within roundoff.
    pub fn has_square_cells(&self) -> bool {
        (self.hx - self.hy).abs() <= 1e-12 * self.hx.max(self.hy)
    }
}

/// Convenience wrapper matching the usual `(lx, ly, nx, ny)` argument order.
pub fn make_grid(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<GridSpec, SetupError> {
    GridSpec::new(lx, ly, nx, ny)
}

/// A scalar quantity sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    /// Wraps raw samples, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, SetupError> {
        if values.len() != grid.len() {
            return Err(SetupError::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SetupError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be well formed.
    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self::from_vec_unchecked(grid, vec![value; grid.len()])
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y_center(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x_center(i), y));
            }
        }
        Self::from_vec_unchecked(grid, values)
    }

    /// Builds a field from a function of the integer cell index.
    pub fn from_index_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(i, j));
            }
        }
        Self::from_vec_unchecked(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self, SetupError> {
        self.check_same_grid(other)?;
        Ok(Self::from_vec_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<(), SetupError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(SetupError::GridMismatch)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Midpoint-rule integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }
}

/// Maximum absolute value over all cells.
pub fn linf_norm(f: &Field) -> f64 {
    f.values().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Initial biomass profile `1.5 + 0.5 sin(y) cos(x)`.
pub fn initial_biomass(x: f64, y: f64) -> f64 {
    1.5 + 0.5 * y.sin() * x.cos()
}

/// Initial water profile `2π + π sin(x) sin(y) + cos(π y)`.
pub fn initial_water(x: f64, y: f64) -> f64 {
    2.0 * PI + PI * x.sin() * y.sin() + (PI * y).cos()
}

/// Evaluates the standard initial data `(n0, w0)` at the cell centers.
pub fn eval_initial_conditions(grid: &GridSpec) -> (Field, Field) {
    (
        Field::from_fn(*grid, initial_biomass),
        Field::from_fn(*grid, initial_water),
    )
}
