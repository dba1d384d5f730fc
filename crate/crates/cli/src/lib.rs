//! Command-line layer: configuration, table ingestion, synthetic data,
//! result directories and reports around the simulation engine.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod report;
pub mod runner;
pub mod synth;

pub use error::{CliError, CliResult, Kind};
