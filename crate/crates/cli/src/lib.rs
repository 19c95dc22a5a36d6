// `!(x > 0.0)` keeps NaN on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Configuration-driven front end to the `semiwave` library.

pub mod commands;
pub mod config;
pub mod model;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Config(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<semiwave::error::Error> for CliError {
    fn from(e: semiwave::error::Error) -> Self {
        use semiwave::error::Error as E;
        match e {
            E::InvalidParameter { .. } | E::NoPositiveFixedPoint { .. } | E::UnboundedDerivative { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "semiwave", version, about = "Minimal speeds and wave profiles for non-local delayed reaction-diffusion equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Verb,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats (csv, svg); overrides `output.formats`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// Accepted for reproducible pipelines; nothing here is random.
    #[arg(long, global = true)]
    pub seedless: bool,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Check the model hypotheses and the kernel mass.
    Validate,
    /// Tabulate the characteristic functions.
    Dispersion,
    /// Minimal speeds of both characteristic functions.
    Minspeed,
    /// Solve for a wave profile.
    Profile,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Validate => "validate",
            Verb::Dispersion => "dispersion",
            Verb::Minspeed => "minspeed",
            Verb::Profile => "profile",
        }
    }
}

/// Runs one command; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match commands::execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("semiwave: {e}");
            e.exit_code()
        }
    }
}
