//! Experiment plumbing: generation, baselines, runs and reports.

pub mod baseline;
pub mod experiment;
pub mod gen;
pub mod verify;

pub use baseline::{full_info_baseline, Baseline};
pub use experiment::{run_experiment, run_instance, ExperimentConfig, ExperimentReport};
pub use gen::{generate_family, generate_game, random_strategy, Family};
pub use verify::{verify, verify_report, VerifySummary};
