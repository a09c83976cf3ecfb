//! `levi`: runs curve flows, builds Levi potentials, integrates level orbits
//! and checks flow diagnostics, writing CSV, JSON and SVG artifacts.
//!
//! Exit codes: 0 all checks passed, 2 a numerical check failed, 3 bad input
//! or configuration, 4 the solver hit a singularity (unless allowed).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levi_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "levi",
    version,
    about = "Inverse curvature flow and Levi potential experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for random seed-point sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for field grids and orbit sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Report a solver singularity without failing.
    #[arg(long, global = true)]
    allow_singularity: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a curve by the inverse curvature flow.
    Flow,
    /// Build a potential from generator points.
    Construct,
    /// Sample a potential on a grid.
    Field,
    /// Launch and verify level orbits.
    Orbit,
    /// Recompute flow diagnostics from a stored snapshot CSV.
    Diagnose,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Check(String),
    Singularity(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 2,
            CliError::Input(_) => 3,
            CliError::Singularity(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Singularity(m) => write!(f, "singularity: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Domain(_)
            | Error::Precondition(_)
            | Error::InsideCriticalSet => CliError::Input(e.to_string()),
            Error::CurvatureSingularity { .. }
            | Error::SupportSingularity { .. }
            | Error::NonConvexSupport { .. }
            | Error::DegenerateGeometry { .. } => CliError::Singularity(e.to_string()),
            Error::HorizonExceeded { .. } | Error::NoConvergence(_) => {
                CliError::Check(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("input error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = std::fs::create_dir_all(&cli.global.out)
        .map_err(CliError::from)
        .and_then(|_| match cli.command {
            Command::Flow => commands::flow(&cli.global),
            Command::Construct => commands::construct(&cli.global, true),
            Command::Field => commands::construct(&cli.global, false),
            Command::Orbit => commands::orbit(&cli.global),
            Command::Diagnose => commands::diagnose(&cli.global),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
