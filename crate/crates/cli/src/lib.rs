//! Experiment runner for the ground-state laboratory: configuration,
//! orchestration, artifacts and plots.

pub mod config;
pub mod output;
pub mod plots;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use output::{verify_manifest, Manifest};
pub use plots::emit_plots;
pub use run::run;
