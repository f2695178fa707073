mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit codes, also listed in the README.
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_COMPUTATION: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Library(kroncov::Error),
    VerifyFailed { failed: usize, total: usize },
}

impl From<kroncov::Error> for CliError {
    fn from(e: kroncov::Error) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use kroncov::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::VerifyFailed { .. } => EXIT_VERIFY_FAILED,
            CliError::Library(e) => match e {
                E::NoConvergence { .. } | E::Degenerate(_) | E::Contract(_) => EXIT_COMPUTATION,
                _ => EXIT_INPUT,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Library(e) => e.to_string(),
            CliError::VerifyFailed { failed, total } => format!("{failed} of {total} checks failed"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Diagnostics stay on one line.
            eprintln!("kroncov: error: {}", e.message().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}
