//! Experiment driver for `bdlab-core`: config files, CSV/JSON output,
//! replica-parallel runners, verification suites and the `bdlab` CLI.

pub use bdlab_core as core;

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod hypothesis;
pub mod report;
pub mod runner;
pub mod suites;
pub mod table;

pub use config::{Config, Manifest};
pub use error::{LabError, Result};
pub use report::{Check, CriterionReport, Report};
