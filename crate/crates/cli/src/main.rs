//! `dkg` — command-line harness for the norm-inflation laboratory.
//!
//! Subcommands: `norms`, `iterate`, `oracle-check`, `inflate`, `solve`.
//! Exit codes: 0 success, 2 bad input (file or config), 3 iteration
//! non-convergence, 4 tolerance breach / failed verdict, 5 solver
//! instability.

mod commands;
mod common;

use clap::{Args, Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dkg", version, about = "Norm-inflation laboratory for the 1D massless Dirac-Klein-Gordon system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: std::path::PathBuf,
    /// Output directory for reports, CSV, and spectra dumps.
    #[arg(long, default_value = ".")]
    out: std::path::PathBuf,
    /// Worker threads for sweep rows (0 = one per core).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Largest N the iteration engine runs at; larger rows use the oracle only.
    #[arg(long, default_value_t = 4096)]
    engine_budget: u32,
    /// Seed for the randomized algebra-constant measurement.
    #[arg(long, default_value_t = 24301)]
    seed: u64,
    /// Also write binary spectra dumps.
    #[arg(long, default_value_t = false)]
    dump_spectra: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print norms of a spectrum dump.
    Norms {
        /// Binary spectrum file.
        file: std::path::PathBuf,
        /// Inhomogeneous Sobolev H^s (repeatable).
        #[arg(long = "hs", value_name = "S", allow_hyphen_values = true)]
        hs: Vec<f64>,
        /// Homogeneous Sobolev Hdot^s (repeatable).
        #[arg(long = "hsdot", value_name = "S", allow_hyphen_values = true)]
        hsdot: Vec<f64>,
        /// Modulation norm.
        #[arg(long)]
        modulation: bool,
        /// L1 norm of the physical function.
        #[arg(long)]
        l1: bool,
        /// L-infinity norm of the physical function.
        #[arg(long)]
        linf: bool,
        /// Half-line Sobolev restricted to xi >= 0 (repeatable).
        #[arg(long = "halfline", value_name = "S", allow_hyphen_values = true)]
        halfline: Vec<f64>,
    },
    /// Run the Picard engine: ledgers, envelope conformance, bound-sequence check.
    Iterate {
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Cross-validate the engine's second iterate against the closed form.
    OracleCheck {
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// N-sweep: data norms shrink while the phi norm stays bounded below.
    Inflate {
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Direct splitting solver vs Picard partial sums, with residuals.
    Solve {
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Norms { file, hs, hsdot, modulation, l1, linf, halfline } => {
            commands::norms::run(&file, &hs, &hsdot, modulation, l1, linf, &halfline)
        }
        Command::Iterate { opts } => commands::iterate::run(&opts),
        Command::OracleCheck { opts } => commands::oracle_check::run(&opts),
        Command::Inflate { opts } => commands::inflate::run(&opts),
        Command::Solve { opts } => commands::solve::run(&opts),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
