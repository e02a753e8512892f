//! Configuration, orchestration and CSV output for the `skinlab` binary.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod recipes;

pub use commands::{evaluate, run, run_all, sweep, Context};
pub use config::{Command, Diagnostic, RunConfig};
pub use error::{CliError, CliResult};

use std::fs;
use std::path::Path;

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RunConfig::parse(&text)
}
