use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use klausmeier::commands::{cmd_analyze, cmd_compare, cmd_kernel_info, cmd_simulate, load_config};
use klausmeier::error::Error;

/// Local and nonlocal Klausmeier vegetation model.
#[derive(Parser)]
#[command(name = "nlkm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one model and write snapshots plus a manifest.
    Simulate {
        /// TOML configuration, or a manifest.json from an earlier run.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print equilibria and both Turing condition sets, then the same report as JSON.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the discrete kernel's mass statistics and stencil size.
    KernelInfo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the local and nonlocal models from the same data and summarize their difference.
    Compare {
        #[arg(long)]
        local: PathBuf,
        #[arg(long)]
        nonlocal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("NLKM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("NLKM_THREADS must be a positive integer (got {raw:?})"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let s = cmd_simulate(&cfg, out.as_deref())?;
            let last = s.manifest.snapshots.last().map(|r| r.diagnostics);
            println!(
                "completed {} steps (dt = {}) in {:.2} s; output in {}",
                s.manifest.derived.steps,
                s.manifest.derived.dt,
                s.manifest.wall_seconds,
                s.out_dir.display()
            );
            if let Some(d) = last {
                println!(
                    "final t = {}: n in [{}, {}], w in [{}, {}]",
                    d.t, d.n_min, d.n_max, d.w_min, d.w_max
                );
            }
        }
        Command::Analyze { config } => {
            let report = cmd_analyze(&load_config(&config)?)?;
            println!("{}", report.render_table());
            println!("{}", report.to_json());
        }
        Command::KernelInfo { config } => {
            let info = cmd_kernel_info(&load_config(&config)?)?;
            print!("{}", info.render());
        }
        Command::Compare {
            local,
            nonlocal,
            out,
        } => {
            let report = cmd_compare(&load_config(&local)?, &load_config(&nonlocal)?, &out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
