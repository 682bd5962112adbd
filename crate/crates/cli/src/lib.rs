//! File formats, configuration and subcommands for the `pleiolv` tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::Config;
pub use error::{CliError, Result};
