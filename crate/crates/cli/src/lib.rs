//! Library side of the `fracmax` command line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod field_file;
pub mod output;
pub mod validate;

pub use error::{CliError, CliResult};
