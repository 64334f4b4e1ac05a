//! Batch front end for the levy-qsd toolkit.
//!
//! Reads a TOML run configuration (one model, one task), executes the task
//! and writes deterministic CSV outputs under a path prefix. Exit status:
//! 0 success, 1 i/o failure, 2 config parse error, 3 validation failure,
//! 4 verification tolerance failure.

mod config;
mod csvout;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use tasks::{run, Overrides};

#[derive(Parser, Debug)]
#[command(name = "levy-qsd", version, about = "Scale functions and quasi-stationary distributions for spectrally positive Levy processes")]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix (overrides `out` from the config).
    #[arg(long)]
    out: Option<String>,
    /// RNG seed override for Monte Carlo tasks.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count; results are identical for any value.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Ignore the error if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config parse failure: {e}");
            return ExitCode::from(2);
        }
    };

    let overrides = Overrides { out: cli.out, seed: cli.seed };
    match run(&cfg, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
