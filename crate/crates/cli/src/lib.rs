//! Batch command-line surface for the hybridcast toolkit.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, Result};
