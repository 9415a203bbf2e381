//! Front end of the `sigmaflow` binary: configuration merging and the
//! subcommands.

pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};
