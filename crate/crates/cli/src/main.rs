//! `refine-lab`: reproduces the numerical results and runs the property suites.
//!
//! Exit codes: 0 success, 1 a property or golden comparison failed, 2 usage,
//! numeric or I/O failure.

mod commands;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "refine-lab", version, about = "Position-auction refinement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute slack for comparisons (command-specific default).
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Net welfare change of refining one advertiser pair, closed form and quadrature.
    ReproduceAppendix {
        #[arg(long = "H", alias = "h", default_value_t = 1000.0)]
        h: f64,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        b: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Efficiency loss of the revenue-optimal auction as the second relevance varies.
    Figure2 {
        /// Comma-separated relevances in [0, 0.8]; defaults to 0, 0.05, ..., 0.8.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Runs a property suite and writes its trial log as CSV.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        /// Trials (main), configurations (tradeoff) or random instances (rearrangement).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte Carlo samples per trade-off configuration.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        /// Number of advertisers for the exhaustive rearrangement check.
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the mechanism on an instance given as JSON.
    Simulate {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Suite {
    Main,
    Tradeoff,
    Rearrangement,
    Conditions,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

/// Result of a command that ran to completion.
pub enum Status {
    Ok,
    PropertyFailed(String),
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("REFINE_LAB_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("REFINE_LAB_THREADS must be a positive integer, got {raw:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    configure_threads()?;
    match cli.command {
        Command::ReproduceAppendix { h, b, common } => commands::reproduce_appendix(h, b, &common),
        Command::Figure2 { grid, samples, seed, common } => commands::figure2(grid, samples, seed, &common),
        Command::Check { suite, trials, seed, samples, alpha_grid, size, common } => {
            let opts = commands::CheckOptions { trials, seed, samples, alpha_grid, size };
            match suite {
                Suite::Main => commands::check_main(&opts, &common),
                Suite::Tradeoff => commands::check_tradeoff(&opts, &common),
                Suite::Rearrangement => commands::check_rearrangements(&opts, &common),
                Suite::Conditions => commands::check_conditions(&common),
            }
        }
        Command::Simulate { config, alpha_grid, format, common } => {
            simulate::run(&config, alpha_grid, format == Format::Csv, &common)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::PropertyFailed(detail)) => {
            eprintln!("{detail}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
