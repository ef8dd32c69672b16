//! Command-line experiment runner.
//!
//! Each subcommand reads a flat `key = value` config, validates every
//! parameter, runs the simulators and writes result files plus a
//! `manifest.json` with SHA-256 checksums into the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{execute, Command, RunOptions};
pub use config::Config;
pub use error::{CliError, Result};
pub use manifest::RunManifest;
