//! `tenspart` command-line driver.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver did not converge
//! (results are still written), 4 I/O error.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::{Failure, EXIT_NOT_CONVERGED};

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TENSPART_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::validation(format!("TENSPART_THREADS must be a positive integer, got {raw:?}")))?;
    tenspart::init_thread_pool(n);
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Normalize(a) => commands::normalize_cmd(a),
        Command::Approx(a) => commands::approx(a),
        Command::Partition(a) => commands::partition(a),
        Command::Expand(a) => commands::expand_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: solver did not converge; results were written anyway", cli.command.name());
            ExitCode::from(EXIT_NOT_CONVERGED as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
