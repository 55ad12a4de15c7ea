//! Experiment configuration, execution and artifact output.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{parse_config, preset, Analysis, ExperimentConfig, Preset, PRESETS};
pub use experiment::{analyze_returns, run_experiment, run_seeds, AnalysisPlan, ExperimentOutcome, RunArtifacts};
