//! Experiment runner for the `spherenet` library: expansion tables, bound
//! tables, Stein checks, rate sweeps and kernel dumps.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Outcome};
pub use config::{Command, ExperimentConfig, Settings};
