//! Std companion to `fleetsim-core`: configuration files, CSV/JSON formats,
//! parallel experiment runs and the `fleetsim` command line.

pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod runner;

pub use error::{CliError, CliResult};
