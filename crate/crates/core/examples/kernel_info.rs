//! Discrete kernel mass and stencil size across kernel widths.
//!
//! `cargo run --example kernel_info`

use klausmeier::grid::make_grid;
use klausmeier::kernel::{build_kernel, KernelSpec, NonlocalMethod};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(20.0, 20.0, 150, 150)?;
    println!(
        "{:>6} {:>12} {:>12} {:>10} {:>8}",
        "sigma", "lambda_disc", "min mass", "weights", "path"
    );
    for sigma in [0.25, 0.5, 1.0, 2.0, 5.0] {
        let k = build_kernel(&grid, &KernelSpec::gaussian(sigma))?;
        println!(
            "{sigma:>6} {:>12.8} {:>12.8} {:>10} {:>8?}",
            k.lambda_disc(),
            k.boundary_mass().min(),
            k.nonzero_weights(),
            k.resolve(NonlocalMethod::Auto)
        );
    }
    Ok(())
}
