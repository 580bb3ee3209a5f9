//! Configuration, orchestration and file output for the `camholm` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod scenario;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
