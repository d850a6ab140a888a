//! Experiment runner for `rwrange-core`: JSON configuration with flag
//! overrides, versioned CSV and JSON outputs, checksummed run manifests and
//! chunked resumption.

pub mod cli;
pub mod config;
pub mod runner;
pub mod store;

pub use config::{parse_grid, Command, ConfigError, ExperimentConfig};
pub use runner::{csv_bytes, run, RunOutcome};
pub use store::{verify, RunManifest, RunStore};
