//! Batch front end: `omegascale <command> --config job.json [--output path] [--verbose]`.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 Monte
//! Carlo estimate flagged or a limit that did not converge.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};

pub use commands::{cmd_exit, cmd_mc_check, cmd_occupation, cmd_omega_ruin, cmd_resolvent, cmd_scale};
pub use config::{ExitJob, Format, JobConfig, McJob, McTarget, OccupationJob, OutputSpec, ResolventJob, RuinJob, ScaleQuery};
pub use output::{Cell, Output};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_FLAGGED: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Scale,
    Exit,
    Resolvent,
    Occupation,
    OmegaRuin,
    McCheck,
}

#[derive(Debug, Parser)]
#[command(name = "omegascale", version, about = "Omega-killed scale functions and exit identities")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON job file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output.path`; `-` for standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub verbose: bool,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } => EXIT_FLAGGED,
        e if e.is_config() => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

pub fn dispatch(command: Command, cfg: &JobConfig, verbose: bool) -> Result<Output> {
    match command {
        Command::Scale => cmd_scale(cfg, verbose),
        Command::Exit => cmd_exit(cfg, verbose),
        Command::Resolvent => cmd_resolvent(cfg, verbose),
        Command::Occupation => cmd_occupation(cfg, verbose),
        Command::OmegaRuin => cmd_omega_ruin(cfg, verbose),
        Command::McCheck => cmd_mc_check(cfg, verbose),
    }
}

fn emit(out: &Output, format: Format, path: Option<&PathBuf>) -> Result<()> {
    let write = |w: &mut dyn Write| match format {
        Format::Csv => out.write_csv(w),
        Format::Json => out.write_json(w),
    };
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let mut f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            write(&mut f)
        }
        _ => write(&mut std::io::stdout().lock()),
    }
}

/// Runs one job and returns the process exit code.
pub fn run(args: &Args) -> u8 {
    let result = JobConfig::from_path(&args.config).and_then(|cfg| {
        let out = dispatch(args.command, &cfg, args.verbose)?;
        emit(&out, cfg.output.format, args.output.as_ref().or(cfg.output.path.as_ref()))?;
        Ok(out.flagged)
    });
    match result {
        Ok(false) => EXIT_OK,
        Ok(true) => {
            eprintln!("warning: Monte Carlo estimate flagged (paths hit the horizon cap)");
            EXIT_FLAGGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
