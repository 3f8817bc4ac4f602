//! Command-line front end for the steady-state Casimir pressure library.

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use config::RunConfig;
pub use error::CliError;
