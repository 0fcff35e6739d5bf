//! Experiment plumbing: seeds, paired comparisons, bootstrap intervals,
//! rate fits, configuration files and the experiment runner.

pub mod bootstrap;
pub mod comparison;
pub mod config;
pub mod runner;
pub mod seed;
pub mod sweep;

pub use bootstrap::{bootstrap_mean_ci, Interval};
pub use comparison::{run_paired, run_paired_multi, ComparisonResult, TrialRecord, CSV_HEADER};
pub use config::{ExperimentConfig, ExperimentKind, SCHEMA};
pub use runner::{run, RunOutput};
pub use seed::derive_seed;
pub use sweep::{fit_rate, nonincreasing, SweepFit};
