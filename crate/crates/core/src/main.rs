use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = omegascale::cli::Args::parse();
    ExitCode::from(omegascale::cli::run(&args))
}
