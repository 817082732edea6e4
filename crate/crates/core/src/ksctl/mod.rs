//! Command-line driver: run configuration, output files, acceptance checks
//! and the `ksctl` subcommands.
//!
//! Every command writes into one output directory and finishes with a
//! `manifest.json` holding the resolved config, its hash and the file list.

pub mod acceptance;
pub mod cli;
pub mod commands;
pub mod config;
pub mod persist;

pub use acceptance::{run_criteria, CriterionResult, CRITERIA};
pub use cli::run;
pub use config::RunConfig;
