//! Local spatial operators for the water equation: the five-point Laplacian
//! and first-order upwind advection along +x.
//!
//! Both use mirrored ghost cells (`z_ghost = z_boundary`), so the discrete
//! normal derivative vanishes on every face.

use rayon::prelude::*;

use crate::error::SetupError;
use crate::grid::Field;

/// Five-point Laplacian with homogeneous Neumann boundaries. Needs `hx == hy`.
pub fn laplacian_neumann(z: &Field) -> Result<Field, SetupError> {
    let g = *z.grid();
    if !g.has_square_cells() {
        return Err(SetupError::NonSquareCells {
            hx: g.hx(),
            hy: g.hy(),
        });
    }
    let (nx, ny) = (g.nx(), g.ny());
    let inv_h2 = 1.0 / (g.hx() * g.hx());
    let zv = z.values();
    let mut out = vec![0.0; nx * ny];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let south = if j == 0 { j } else { j - 1 };
        let north = if j + 1 == ny { j } else { j + 1 };
        let (zs, zc, zn) = (
            &zv[south * nx..][..nx],
            &zv[j * nx..][..nx],
            &zv[north * nx..][..nx],
        );
        for (i, cell) in row.iter_mut().enumerate() {
            let west = if i == 0 { i } else { i - 1 };
            let east = if i + 1 == nx { i } else { i + 1 };
            let c = zc[i];
            // Differences first, so constants give exactly zero.
            *cell = ((zc[east] - c) + (zc[west] - c) + (zn[i] - c) + (zs[i] - c)) * inv_h2;
        }
    });
    Ok(Field::from_vec_unchecked(g, out))
}

/// Upwind `v ∂z/∂x` for transport toward −x: `v (z_{i+1} − z_i) / hx`.
///
/// The last column sees its mirrored ghost and gets zero.
pub fn advection_x(z: &Field, v: f64) -> Result<Field, SetupError> {
    if !(v >= 0.0) {
        return Err(SetupError::NegativeSpeed(v));
    }
    let g = *z.grid();
    let nx = g.nx();
    let scale = v / g.hx();
    let mut out = vec![0.0; g.len()];
    if v == 0.0 {
        return Ok(Field::from_vec_unchecked(g, out));
    }
    out.par_chunks_mut(nx)
        .zip(z.values().par_chunks(nx))
        .for_each(|(row, zr)| {
            for i in 0..nx - 1 {
                row[i] = scale * (zr[i + 1] - zr[i]);
            }
            row[nx - 1] = 0.0;
        });
    Ok(Field::from_vec_unchecked(g, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{linf_norm, make_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = make_grid(3.0, 3.0, 7, 7).unwrap();
        let l = laplacian_neumann(&Field::constant(g, 2.25)).unwrap();
        assert!(l.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_linear_profile_hand_computation() {
        // Four cells in x with h = 1, z = x. Interior cells see a zero second
        // difference; the boundary cells see a one-sided difference of +-h
        // against their mirrored ghost, i.e. +-1/h.
        let g = make_grid(4.0, 4.0, 4, 4).unwrap();
        let z = Field::from_fn(g, |x, _| x);
        let l = laplacian_neumann(&z).unwrap();
        for j in 0..4 {
            assert_eq!(l.at(0, j), 1.0);
            assert_eq!(l.at(1, j), 0.0);
            assert_eq!(l.at(2, j), 0.0);
            assert_eq!(l.at(3, j), -1.0);
        }
    }

    #[test]
    fn laplacian_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = make_grid(5.0, 5.0, 25, 25).unwrap();
        for _ in 0..20 {
            let z = Field::from_index_fn(g, |_, _| rng.random::<f64>() * 10.0 - 5.0);
            let l = laplacian_neumann(&z).unwrap();
            let total: f64 = l.values().iter().sum::<f64>() * g.cell_area();
            assert!(total.abs() <= 1e-12 * linf_norm(&z) * g.area(), "{total}");
        }
    }

    #[test]
    fn laplacian_rejects_rectangular_cells() {
        let g = make_grid(4.0, 3.0, 4, 4).unwrap();
        assert!(matches!(
            laplacian_neumann(&Field::zeros(g)),
            Err(SetupError::NonSquareCells { .. })
        ));
    }

    #[test]
    fn advection_cases() {
        let g = make_grid(8.0, 4.0, 16, 8).unwrap();
        assert!(advection_x(&Field::constant(g, 1.5), 5.0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let z = Field::from_fn(g, |x, y| x + y * y);
        let a = advection_x(&z, 3.0).unwrap();
        for j in 0..g.ny() {
            for i in 0..g.nx() - 1 {
                assert_eq!(a.at(i, j), 3.0);
            }
            assert_eq!(a.at(g.nx() - 1, j), 0.0);
        }
        assert!(advection_x(&z, 0.0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(
            advection_x(&z, -1.0),
            Err(SetupError::NegativeSpeed(_))
        ));
    }

    #[test]
    fn diffusion_step_respects_maximum_principle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = make_grid(2.0, 2.0, 20, 20).unwrap();
        let d2 = 0.003;
        let dt = g.hx() * g.hx() / (4.0 * d2);
        let mut w = Field::from_index_fn(g, |_, _| rng.random::<f64>());
        for _ in 0..50 {
            let (lo, hi) = (w.min(), w.max());
            let l = laplacian_neumann(&w).unwrap();
            w = w.zip_map(&l, |a, b| a + dt * d2 * b).unwrap();
            assert!(w.min() >= lo - 1e-15);
            assert!(w.max() <= hi + 1e-15);
        }
    }
}
