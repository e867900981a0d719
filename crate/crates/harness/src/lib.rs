//! Declarative experiment runner for the movable-antenna toolkit.
//!
//! A JSON [`config::ExperimentConfig`] names a catalog experiment, overrides
//! some of its settings, and lists seeds and an optional sweep. The runner
//! resolves defaults, hashes the result, derives one seed per trial from
//! that hash, runs trials on a worker pool and emits a
//! [`table::ResultTable`] as CSV or JSON.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod runner;
pub mod table;

pub use config::{resolve, ExperimentConfig, Resolved};
pub use error::{HarnessError, Result};
pub use runner::{run_config, run_experiment};
pub use table::{Format, ResultTable};
