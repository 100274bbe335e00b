//! A subsolution started from the same data stays below the solution.
//!
//! `cargo run --release --example comparison_principle`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use klausmeier::analysis::comparison_oracle;
use klausmeier::grid::{make_grid, Field};
use klausmeier::kernel::{build_kernel, KernelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(10.0, 10.0, 32, 32)?;
    let kernel = build_kernel(&grid, &KernelSpec::gaussian(1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let zeta0 = Field::from_index_fn(grid, |_, _| rng.random_range(0.0..1.0));
    let gap = Field::from_index_fn(grid, |_, _| rng.random_range(0.0..0.5));
    let decay = comparison_oracle(&kernel, &|z| -z, &zeta0, &gap, 0.01, 1.0)?;
    println!(
        "linear decay:    holds = {}, min margin = {:.3e}",
        decay.holds(),
        decay.min_margin
    );

    let small = zeta0.map(|z| 0.1 * z);
    let quadratic = comparison_oracle(&kernel, &|z| z * z, &small, &gap, 0.01, 1.0)?;
    println!(
        "quadratic growth: holds = {}, min margin = {:.3e}",
        quadratic.holds(),
        quadratic.min_margin
    );

    Ok(())
}
