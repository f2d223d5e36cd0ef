//! JSON formats, CSV emission and the `filtra` command line, on top of
//! `filtra-core`.

pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;

pub use error::{CliError, Result};
