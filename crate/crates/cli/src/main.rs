mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use cubic_core::cubic_enum::EnumError;
use cubic_core::density::DensityError;
use cubic_core::family::FamilyError;
use cubic_core::numkernel::KernelError;
use cubic_core::ratios::RatiosError;

use config::{Cli, Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("i/o error: {e}"))
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<EnumError> for CliError {
    fn from(e: EnumError) -> Self {
        match e {
            EnumError::Unsupported(_) => CliError::Validation(e.to_string()),
            EnumError::Overflow => CliError::Numeric(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Enum(inner) => inner.into(),
            FamilyError::Io(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::QuadratureNonconvergence(_) | DensityError::Kernel(_) => CliError::Numeric(e.to_string()),
            DensityError::Family(inner) => inner.into(),
            DensityError::Io(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<RatiosError> for CliError {
    fn from(e: RatiosError) -> Self {
        match e {
            RatiosError::DomainViolation(_) | RatiosError::PoleProximity(_) => CliError::Validation(e.to_string()),
            RatiosError::Density(inner) => inner.into(),
            RatiosError::Io(inner) => inner.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Other(e.to_string()))?;
    match cli.command {
        Command::Enumerate => commands::enumerate(&cfg),
        Command::Counts => commands::counts(&cfg),
        Command::Errors => commands::errors(&cfg),
        Command::Density => commands::density(&cfg),
        Command::Ratios => commands::ratios(&cfg),
        Command::Compare => commands::compare(&cfg),
        Command::Selftest => commands::selftest(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
