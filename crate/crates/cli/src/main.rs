mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes mapped to exit status 1 (usage) and 2 (data).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<unceval::Error> for CliError {
    fn from(e: unceval::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn threads(command: &Command) -> Option<usize> {
    match command {
        Command::Propagate(a) => a.common.threads,
        Command::Simulate(a) => a.common.threads,
        Command::Rank(a) => a.common.threads,
        Command::Gof(a) => a.common.threads,
        Command::Sweep(a) => a.common.threads,
        Command::Srmse(a) => a.common.threads,
        Command::Analyze(a) => a.common.threads,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = threads(&cli.command) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    }
    match cli.command {
        Command::Propagate(a) => commands::propagate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Rank(a) => commands::rank(a),
        Command::Gof(a) => commands::gof(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Srmse(a) => commands::srmse(a),
        Command::Analyze(a) => commands::analyze(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
