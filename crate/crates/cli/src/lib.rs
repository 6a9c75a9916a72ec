//! Scenario-driven experiment runner.
//!
//! A scenario file declares one model and its parameters; each command
//! validates it, runs the matching experiment and writes plot-ready CSV plus
//! a JSON manifest. Outputs are independent of the worker count.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod scenario;

pub use commands::{resolve_out_dir, run, Command, RunOptions, RunOutcome, OUT_DIR_ENV};
pub use error::{CliError, CliResult};
