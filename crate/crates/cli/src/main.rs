mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// A failed run and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or parameter values: exit 1.
    Usage(String),
    /// A computation or oracle check failed: exit 2.
    Validation(String),
    /// Reading or writing a file failed: exit 3.
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Io(m) => m,
        }
    }
}

impl From<iot_energy::Error> for Failure {
    fn from(e: iot_energy::Error) -> Self {
        use iot_energy::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_)
            | E::Domain(_)
            | E::UnusableLink
            | E::AirtimeViolation { .. } => Failure::Usage(msg),
            E::Io { .. } | E::Csv(_) | E::Parse { .. } => Failure::Io(msg),
            _ => Failure::Validation(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
