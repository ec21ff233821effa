mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{
    BoundsArgs, McArgs, OptimizeArgs, OracleArgs, ReproduceArgs, ScenarioCmdArgs, SweepArgs,
};
use crate::config::{Resolver, UsageError};

/// Covert phase-sensing bounds with an ASE floodlight source.
#[derive(Debug, Parser)]
#[command(name = "covsense", version)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key = value config file; defaults to $COVSENSE_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Covariance matrices, Willie's QRE, c2, c3 and the photon budget.
    Scenario(ScenarioCmdArgs),
    /// QFI, QCRB, heterodyne and coherent-state bounds.
    Bounds(BoundsArgs),
    /// Monte-Carlo MSE of the heterodyne phase estimator.
    MseMc(McArgs),
    /// c_ASE and B over a frequency grid.
    Sweep(SweepArgs),
    /// Wavelength minimizing c_ASE, or B at a fixed wavelength.
    Optimize(OptimizeArgs),
    /// Residuals of every link convention against the published numbers.
    ReproducePaper(ReproduceArgs),
    /// Gaussian results against the truncated Fock-space oracle.
    OracleCheck(OracleArgs),
}

pub enum Failure {
    Usage(String),
    Run(covsense::error::Error),
    Io(std::io::Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<covsense::error::Error> for Failure {
    fn from(e: covsense::error::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn run(cli: Cli) -> Result<Vec<u8>, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot build thread pool: {e}")))?;
    }
    let mut r = Resolver::load(cli.config.as_deref())?;
    match cli.command {
        Command::Scenario(a) => commands::scenario(&mut r, a),
        Command::Bounds(a) => commands::bounds(&mut r, a),
        Command::MseMc(a) => commands::mse_mc(&mut r, a),
        Command::Sweep(a) => commands::sweep(&mut r, a),
        Command::Optimize(a) => commands::optimize(&mut r, a),
        Command::ReproducePaper(a) => commands::reproduce(&mut r, a),
        Command::OracleCheck(a) => commands::oracle_check(&mut r, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(bytes) => {
            let mut out = std::io::stdout().lock();
            match out.write_all(&bytes).and_then(|_| out.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("covsense: write failed: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            let _ = std::io::stdout().write_all(&output::error_json(e.kind(), &e.to_string()));
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            let _ = std::io::stdout().write_all(&output::error_json("io", &e.to_string()));
            ExitCode::from(1)
        }
    }
}
