//! Batch experiment runner: TOML configs in, CSV/JSON tables and a digest
//! manifest out.

pub mod config;
pub mod experiments;
pub mod run;

pub use config::{validate_config, validate_config_with, ConfigError, ConfigIssue, ExperimentConfig, Kind, Overrides, Params};
pub use experiments::{execute, Outputs};
pub use run::{run_experiment, run_experiment_with_cancel, RunError, RunManifest};
