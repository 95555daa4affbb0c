//! Library side of the `treemath` command: run configuration, dataset
//! files, and the train/generate/evaluate pipeline.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod records;

pub use config::RunConfig;
pub use error::{exit_code, CliError};
