//! Command-line harness: run configuration, training runs with resumable
//! per-seed directories, summaries, trace CSVs and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod summary;
pub mod trace;

pub use config::{Preset, RunConfig};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, run_suite, RunOptions};
