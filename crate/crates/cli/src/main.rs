//! `morpho`: command-line front end for surface matching, shape transfer
//! and HRTF spatial analysis.
//!
//! Exit codes: 0 success, 2 usage, 3 IO or parse failure, 4 numerical
//! failure.

mod cli;
mod commands;
mod config;
mod error;

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = cli::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
