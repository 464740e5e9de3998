//! `isocline`: trace generalized isoclines, emit line-field grids and locate equilibria.
//!
//! Exit codes: 0 converged, 1 configuration error, 2 not converged, 3 numerical error.

mod config;
mod equilibria;
mod line_field;
mod problem;
mod trace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ManifoldName, PotentialName};
use line_field::Grid;

/// Outcome classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    NotConverged(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::NotConverged(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::NotConverged(m) | Failure::Numerical(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "isocline",
    version,
    about = "Equilibrium search by tracing generalized isoclines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace one isocline and write its trajectory as CSV.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output path in the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the isocline line field on a grid of primary-chart points.
    LineField {
        #[arg(long, value_enum)]
        manifold: ManifoldName,
        #[arg(long, value_enum)]
        potential: PotentialName,
        /// `x0,x1,y0,y1,nx,ny`
        #[arg(long, allow_hyphen_values = true)]
        grid: Grid,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace from many starts, polish the endpoints and list distinct equilibria as JSON.
    Equilibria {
        #[arg(long)]
        config: PathBuf,
        /// A grid `x0,x1,y0,y1,nx,ny` or a CSV file of start points.
        #[arg(long, allow_hyphen_values = true)]
        starts: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Trace { config, seed, out } => trace::run(&config, seed, out),
        Command::LineField {
            manifold,
            potential,
            grid,
            out,
        } => line_field::run(manifold, potential, &grid, &out),
        Command::Equilibria { config, starts, out } => equilibria::run(&config, &starts, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
