mod args;
mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

/// Reads `PRAM_THREADS` and sizes the global worker pool (0 = automatic).
fn init_threads() -> CliResult<usize> {
    let threads = match std::env::var("PRAM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("PRAM_THREADS must be a nonnegative integer, got {v:?}")))?,
        _ => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    }
    Ok(threads)
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = init_threads()?;
    match &cli.command {
        Command::Fit(a) => commands::fit(a, threads),
        Command::Cv(a) => commands::cv(a, threads),
        Command::Simulate(a) => commands::simulate(a, threads),
        Command::Predict(a) => commands::predict(a, threads),
        Command::Rpe(a) => commands::rpe(a, threads),
        Command::Prescreen(a) => commands::prescreen(a, threads),
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", CliError::Usage(msg.trim().to_string()).to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
