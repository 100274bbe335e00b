//! Checks the nonlocal operator's structural identities on random data.
//!
//! `cargo run --release --example operator_identities`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use klausmeier::analysis::lemma21_identity_residuals;
use klausmeier::grid::{linf_norm, make_grid, Field};
use klausmeier::kernel::{build_kernel, KernelSpec};
use klausmeier::localop::laplacian_neumann;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(20.0, 20.0, 64, 64)?;
    let kernel = build_kernel(&grid, &KernelSpec::gaussian(1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let z = Field::from_index_fn(grid, |_, _| rng.random_range(-1.0..1.0));
    let v = Field::from_index_fn(grid, |_, _| rng.random_range(-1.0..1.0));

    let on_constant = kernel.apply_direct(&Field::constant(grid, 2.5))?;
    println!("max |Γ(2.5)|            = {:e}", linf_norm(&on_constant));

    let direct = kernel.apply_direct(&z)?;
    let fft = kernel.apply_fft(&z)?;
    let gap = direct.zip_map(&fft, |a, b| a - b)?;
    println!("max |direct - fft|      = {:e}", linf_norm(&gap));
    println!(
        "|Γz| / (2 λ |z|)        = {:.4}",
        linf_norm(&direct) / (2.0 * kernel.lambda_disc() * linf_norm(&z))
    );
    println!(
        "∫Γz                     = {:e}",
        kernel.integral_of_gamma(&z)?
    );

    let (r1, r2) = lemma21_identity_residuals(&kernel, &v, &z)?;
    println!("symmetrization residual = {r1:e}");
    println!("negative-part quantity  = {r2:.6} (nonnegative)");

    // cos(πx/10) cos(πy/20) satisfies the no-flux condition on [0, 20]².
    let (kx, ky) = (std::f64::consts::PI / 10.0, std::f64::consts::PI / 20.0);
    let mode = Field::from_fn(grid, |x, y| (kx * x).cos() * (ky * y).cos());
    let lap = laplacian_neumann(&mode)?;
    println!(
        "|Δ mode|                = {:.6} (continuum {:.6})",
        linf_norm(&lap),
        kx * kx + ky * ky
    );
    Ok(())
}
