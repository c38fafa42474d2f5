//! Library side of the `homvis` command-line tool.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::Format;
pub use config::{Axis, ExperimentConfig, Mode};
pub use error::CliError;
