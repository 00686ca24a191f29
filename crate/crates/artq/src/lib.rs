//! Experiment harnesses, model files and command line for adaptive random
//! testing with q-gram aggregation. The algorithms live in `artq_core`.

pub mod error;
pub mod model_file;
pub mod report;
pub mod simulation;
pub mod webgen;

pub use error::CliError;
