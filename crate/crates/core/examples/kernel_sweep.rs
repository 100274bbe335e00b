//! Final biomass statistics as the dispersal kernel widens.
//!
//! `cargo run --release --example kernel_sweep -- [t_end]`

use klausmeier::commands::{PatternMetrics, PreparedRun};
use klausmeier::io::config::RunConfig;
use klausmeier::stepper::NullSink;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t_end: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20.0);
    println!(
        "{:>6} {:>10} {:>12} {:>14}",
        "sigma", "steps", "CV", "wavelength"
    );
    for sigma in [0.5, 1.0, 2.0, 5.0] {
        let mut cfg = RunConfig::default();
        cfg.grid.nx = 100;
        cfg.grid.ny = 100;
        cfg.kernel.sigma = sigma;
        cfg.control.t_end = t_end;
        cfg.control.snapshot_stride = u64::MAX;
        let run = PreparedRun::new(&cfg)?;
        let outcome = run.run(&mut NullSink)?;
        let m = PatternMetrics::of(&outcome.final_state.n);
        println!(
            "{sigma:>6} {:>10} {:>12.4e} {:>14}",
            run.control.step_count(0.0),
            m.coefficient_of_variation,
            m.dominant_wavelength
                .map_or("none".to_string(), |w| format!("{w:.3}"))
        );
    }
    Ok(())
}
