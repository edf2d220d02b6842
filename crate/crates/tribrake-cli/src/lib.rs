//! Command-line front end: run configuration, output files and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use commands::Subcommand;
pub use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] tribrake::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("acceptance criteria failed: {0:?}")]
    Acceptance(Vec<u8>),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for numerical failure, 4 for i/o, 1 for a failed suite.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
            CliError::Acceptance(_) => 1,
        }
    }
}

#[derive(Serialize)]
struct ErrorReport {
    subcommand: &'static str,
    kind: &'static str,
    message: String,
}

/// Run one subcommand, writing its outputs and manifest under `out_dir`.
pub fn execute(sub: Subcommand, cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let mut out = output::Output::create(out_dir)?;
    match commands::run(sub, cfg, &mut out) {
        Ok(()) => {
            out.finish(sub.name(), cfg, "ok")?;
            Ok(())
        }
        Err(e) => {
            let kind = match &e {
                CliError::Config(_) => "config",
                CliError::Numerical(_) => "numerical",
                CliError::Io(_) => "io",
                CliError::Acceptance(_) => "acceptance",
            };
            out.write_json("error.json", &ErrorReport { subcommand: sub.name(), kind, message: e.to_string() })?;
            out.finish(sub.name(), cfg, "error")?;
            Err(e)
        }
    }
}
