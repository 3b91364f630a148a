//! Command-line harness: strict JSON configs in, reproducible CSV and JSON
//! records out.

pub mod bounds_cmd;
pub mod config;
pub mod convert;
pub mod output;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_BOUND: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qhm", version, about = "QHM experiments, schedule sweeps and bound checks")]
pub struct Cli {
    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every seed of one config and write CSVs plus a summary.
    Run(RunArgs),
    /// Run the cartesian grid of a sweep file and write a leaderboard.
    Sweep(RunArgs),
    /// Evaluate the bounds of a config's plan without training.
    Bounds(RunArgs),
    /// Convert constant SHB and NSHB hyperparameters.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seeds`, e.g. `--seeds 0,1,2`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub from: convert::Method,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
}

fn load_run(args: &RunArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(&args.config)?.with_overrides(args.seeds.as_deref(), args.out.as_deref()))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Runs a parsed command and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let quiet = cli.quiet;
    let result: Result<i32, CliError> = match cli.command {
        Command::Run(args) => load_run(&args).and_then(|cfg| {
            let outcome = run::execute(&cfg)?;
            if !quiet {
                println!(
                    "{} {} -> {}",
                    if outcome.diverged { "diverged" } else { "ok" },
                    outcome.config_hash,
                    cfg.output_dir.display()
                );
            }
            Ok(if outcome.diverged { EXIT_DIVERGED } else { EXIT_OK })
        }),
        Command::Sweep(args) => sweep::SweepConfig::load(&args.config).map_err(CliError::from).and_then(|s| {
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let board = sweep::execute_sweep(&s, args.seeds.as_deref(), &out)?;
            if !quiet {
                println!("{} cells ({} failed) -> {}", board.cells, board.failed, out.join(sweep::LEADERBOARD_JSON).display());
            }
            Ok(EXIT_OK)
        }),
        Command::Bounds(args) => load_run(&args).and_then(|cfg| {
            let (out, _) = bounds_cmd::execute_bounds(&cfg)?;
            if !quiet {
                print_json(&out);
            }
            for f in &out.failures {
                eprintln!("bound check failed: {f}");
            }
            Ok(if out.ok() { EXIT_OK } else { EXIT_BOUND })
        }),
        Command::Convert(args) => convert::convert(args.from, args.alpha, args.beta).map_err(CliError::from).map(|c| {
            print_json(&c);
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
