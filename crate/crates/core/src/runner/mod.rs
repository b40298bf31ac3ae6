//! Config-driven experiment runner producing JSON or CSV reports.

mod config;
mod experiments;
mod report;
mod rng;

pub use config::*;
pub use experiments::{run_all, run_experiment};
pub use report::{emit_report, render_csv, render_json, ReportFormat, ReportRecord, ResultValue, Verdict};
pub use rng::record_rng;

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid {object}: {reason}")]
    Validation { object: String, reason: String },
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("bad tolerance override: {0}")]
    Override(String),
    #[error("experiment {experiment:?} failed: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: crate::error::Error,
    },
}
