//! Config-driven experiment runner for the triadic-closure models.
//!
//! A run is a pure function of its [`ExperimentConfig`]: the same config and
//! seed always produce byte-identical files.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Experiment, ExperimentConfig, DEFAULT_SEED};
pub use run::{run, RunOutput};
