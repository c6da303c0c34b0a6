use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use npi::config::parse_config;
use npi::experiment::{default_output, run_experiment, RunOptions};
use npi::summarize::{summarize_paths, write_summary};
use npi::{NpiError, Result};

/// Non-equilibrium path-integral simulations and master-equation checks.
#[derive(Parser)]
#[command(name = "npi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration.
    Run {
        config: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for branch evaluation (also `NPI_WORKERS`).
        #[arg(long, env = "NPI_WORKERS", default_value_t = 1)]
        workers: usize,
    },
    /// Compare sweep results from several run manifests.
    Summarize {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        /// Where to write the CSV table.
        #[arg(long, default_value = "summary.csv")]
        csv: PathBuf,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn read_config(path: &PathBuf) -> Result<npi::config::ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| NpiError::io(path, e))?;
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out, workers } => {
            let mut cfg = read_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let output = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| default_output(&cfg));
            let opts = RunOptions { output: output.clone(), workers };
            let manifest = run_experiment(&cfg, &opts)?;
            println!("{} run complete: {} files in {}", cfg.mode.name(), manifest.files.len(), output.display());
            for r in &manifest.results {
                for w in &r.warnings {
                    eprintln!("warning (P = {}): {w}", r.beads);
                }
            }
            Ok(())
        }
        Command::Summarize { manifests, csv } => {
            let summary = summarize_paths(&manifests)?;
            print!("{}", summary.to_text());
            write_summary(&summary, &csv)
        }
        Command::Validate { config } => {
            let cfg = read_config(&config)?;
            println!("{}: valid {} configuration", config.display(), cfg.mode.name());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
