//! Experiment runner: reads a JSON config, runs one experiment and writes
//! CSV tables, SVG plots and a `manifest.json`.

pub mod config;
pub mod expr;
pub mod output;
pub mod run;

pub use config::{ConfigError, Experiment, RunConfig};
pub use run::{run, RunError, RunOutcome};
