//! Experiment orchestration for `vecobstacle`: JSON configs, staged runs
//! writing VOPF1 fields, CSV tables and JSON reports, and a checksummed
//! manifest.

pub mod config;
mod error;
pub mod manifest;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::{Result, RunError};
pub use manifest::{ExperimentManifest, Stage};
pub use pipeline::{planned_stages, restrict, run_experiment};
