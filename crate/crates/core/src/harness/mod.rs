//! Experiment configuration, seeding, suites and reports.

pub mod config;
pub mod report;
pub mod seed;
pub mod suites;

pub use config::{ExperimentConfig, Parameters, Suite};
pub use report::{Assertion, ExperimentReport};
pub use seed::{derive_trial_seed, trial_rng};
pub use suites::run_suite;
