//! Command-line driver for the `arcscat-core` crack scattering toolkit:
//! configuration, file formats and subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::CliError;
