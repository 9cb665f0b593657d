//! Experiment harness: configuration, the end-to-end pipeline, benchmark
//! protocols and their CSV reports.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod pipeline;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use pipeline::{load_or_train_model, run_sr_pipeline, Model};
pub use report::{BenchmarkReport, Row};
