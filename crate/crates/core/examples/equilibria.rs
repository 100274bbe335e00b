//! Equilibria and linear (Turing) analysis of the kinetics.
//!
//! `cargo run --example equilibria -- [a] [alpha]`

use klausmeier::commands::cmd_analyze;
use klausmeier::io::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>());
    let mut cfg = RunConfig::default();
    if let Some(a) = args.next() {
        cfg.model.a = a?;
    }
    if let Some(alpha) = args.next() {
        cfg.model.alpha = alpha?;
    }
    let report = cmd_analyze(&cfg)?;
    println!("{}", report.render_table());
    println!(
        "discriminant a^2 - 4 alpha^2 = {:.6}",
        report.equilibria.discriminant
    );
    Ok(())
}
