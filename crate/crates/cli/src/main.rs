//! Command-line front end for the entprop engine.
//!
//! Subcommands: `thermalize` (magnetization relaxation and half-chain
//! entropy from the Néel state), `propagate` (the two-variant probe
//! protocol with extracted time scales and velocity fits), `sweep`
//! (propagation across a list of transverse-field values), and
//! `dispersion` (quasi-particle dispersion and group-velocity tables).
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 when
//! a numerical contract is breached (eigensolver residual, density-matrix
//! invariants, conserved-norm drift).

mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entprop::EntropyBase;

use commands::Ctx;
use config::{ConfigDoc, Overrides};

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration, usage, or I/O problem (exit code 1).
    Usage(String),
    /// Numerical contract violation inside the engine (exit code 2).
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<entprop::Error> for CliError {
    fn from(e: entprop::Error) -> Self {
        match e {
            entprop::Error::ContractViolation(_)
            | entprop::Error::EigenConvergence { .. }
            | entprop::Error::NotSymmetric { .. }
            | entprop::Error::InvalidDensityMatrix(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "entprop",
    version,
    about = "Exact-diagonalization engine for entanglement propagation in spin-1/2 chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Total magnetization, half-chain entropy, and ensemble averages.
    Thermalize(RunArgs),
    /// Two-variant probe protocol: entropy fronts, time scales, fits.
    Propagate(RunArgs),
    /// Propagation across a list of transverse-field values.
    Sweep(RunArgs),
    /// Quasi-particle dispersion and group-velocity tables.
    Dispersion(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $ENTPROP_OUT_DIR, else the current dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep points (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the configured time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the configured evolution window.
    #[arg(long)]
    tmax: Option<f64>,
    /// Entropy base for emitted entropy columns.
    #[arg(long, value_parser = ["2", "e"])]
    base: Option<String>,
}

impl RunArgs {
    fn ctx(&self) -> CliResult<Ctx> {
        let out_dir = self
            .out
            .clone()
            .or_else(|| std::env::var_os("ENTPROP_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out_dir.display())))?;
        let threads = match self.threads {
            Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let base = self.base.as_deref().map(|b| match b {
            "e" => EntropyBase::E,
            _ => EntropyBase::Two,
        });
        Ok(Ctx {
            out_dir,
            threads,
            overrides: Overrides {
                dt: self.dt,
                t_max: self.tmax,
                base,
            },
        })
    }
}

type Handler = fn(&ConfigDoc, &Ctx) -> CliResult<()>;

fn run(cli: Cli) -> CliResult<()> {
    let (args, handler): (&RunArgs, Handler) = match &cli.command {
        Cmd::Thermalize(a) => (a, commands::cmd_thermalize),
        Cmd::Propagate(a) => (a, commands::cmd_propagate),
        Cmd::Sweep(a) => (a, commands::cmd_sweep),
        Cmd::Dispersion(a) => (a, commands::cmd_dispersion),
    };
    let doc = ConfigDoc::from_path(&args.config)?;
    handler(&doc, &args.ctx()?)
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical contract violation: {msg}");
            ExitCode::from(2)
        }
    }
}
