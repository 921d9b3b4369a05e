//! Scenario and level generators, the paired-trial driver and its reports.

pub mod experiment;
pub mod gates;
pub mod level;
pub mod scenario;

pub use experiment::{run_experiment, Experiment, ExperimentConfig, MetricsRow, Pair, Report};
