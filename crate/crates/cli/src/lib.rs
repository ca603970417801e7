//! `bgp` command-line front end.
//!
//! * `fit` infers hyperparameters on a training CSV and writes a model file.
//! * `predict` evaluates a model on a query CSV.
//! * `benchmark` runs the synthetic regression suite.
//! * `density` runs the density-approximation suite.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

// `!(a < b)` comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod model;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub use config::{Cli, RunConfig};
pub use error::{CliError, CliResult};

/// Parses `args` (program name first), runs the command and returns the
/// files it wrote. Help and version text go to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            write!(out, "{}", e.render()).map_err(|e| CliError::data(e.to_string()))?;
            return Ok(Vec::new());
        }
        Err(e) => {
            return Err(CliError::Usage(
                e.render().to_string().trim_end().to_string(),
            ))
        }
    };
    let config = RunConfig::resolve(cli)?;
    commands::execute(&config, out)
}
