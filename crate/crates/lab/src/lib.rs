//! Experiment harness, file formats and command-line front end for the
//! sedimentation laboratory.

pub mod config;
pub mod error;
pub mod harness;
pub mod io;

pub use config::{DeltaRule, ExperimentConfig, InitialDatum};
pub use error::LabError;
pub use harness::{compare_micro_macro, sweep_epsilon, ConvergenceReport, DistanceSeries, ReportRow, RowStatus};
