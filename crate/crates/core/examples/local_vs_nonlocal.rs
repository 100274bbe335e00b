//! Runs the local and nonlocal models from the same data and compares them.
//!
//! `cargo run --release --example local_vs_nonlocal -- [t_end] [out_dir]`

use std::path::PathBuf;

use klausmeier::commands::cmd_compare;
use klausmeier::io::config::RunConfig;
use klausmeier::reaction::ModelParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let t_end: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20.0);
    let out: PathBuf = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| "compare_out".into());

    let mut nonlocal = RunConfig::default();
    nonlocal.grid.nx = 75;
    nonlocal.grid.ny = 75;
    nonlocal.control.t_end = t_end;
    let local = RunConfig {
        model: ModelParams::reference_local(),
        ..nonlocal.clone()
    };

    let report = cmd_compare(&local, &nonlocal, &out)?;
    println!("t = {}", report.t_end);
    println!("L2 distance  = {:.6}", report.l2_distance);
    println!("Linf distance = {:.6}", report.linf_distance);
    println!("local:    {:?}", report.local);
    println!("nonlocal: {:?}", report.nonlocal);
    println!("snapshots under {}", out.display());
    Ok(())
}
