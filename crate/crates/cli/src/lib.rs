//! Command-line driver and HTTP service for zonecut.

pub mod commands;
pub mod server;

pub use commands::{run, Cli, CliError};
