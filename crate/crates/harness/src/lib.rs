//! Config-driven convergence studies for controlled branching processes.
//!
//! A TOML experiment file fixes the model sequence, the limit and the study
//! grids; each study returns a [`report::Table`] that is written as CSV. Tables
//! are a deterministic function of the config text and seed.

pub mod config;
pub mod error;
pub mod model;
pub mod report;
pub mod study;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use report::Table;
pub use study::{
    run_convergence_study, run_distribution_comparison, run_family_check, run_monotone, run_simulation, with_threads,
    Outcome,
};
