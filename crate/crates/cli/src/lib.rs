//! File formats, run configuration and the subcommand pipeline around
//! `crisiscomm-core`.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod fixture;
pub mod formats;
pub mod pipeline;
pub mod report;

pub use error::{CliError, Result};
