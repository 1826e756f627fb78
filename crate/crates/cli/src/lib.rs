//! Command-line harness for `causalwalk-core`: dataset, checkpoint and SCM
//! file formats, metric reports, and the `gen-data`, `train`, `eval`,
//! `ablate` and `scm-verify` commands.

pub mod checkpoint;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod report;
pub mod scm_file;

pub use error::{CliError, Result};
