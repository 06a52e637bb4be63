//! Experiment runner for the `corrgap` library: configs, the end-to-end
//! pipeline, JSON reports and the `corrgap` command line.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod seed;

pub use config::{ExperimentConfig, MethodKind, MethodSpec, PatternSpec};
pub use error::CliError;
pub use pipeline::{render_report, run_pipeline};
pub use report::ExperimentReport;
