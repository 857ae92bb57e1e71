//! Deterministic evaluation: scenarios, per-trial traces, metrics, sweeps,
//! observer diagnostics and delimited reports.

mod diagnostics;
mod metrics;
mod report;
mod run;
mod scenario;

pub use diagnostics::{observer_diagnostics, pearson, DiagnosticsReport};
pub use metrics::{absolute_tracking_error, peak_displacement, Metrics};
pub use report::{export_report, parse_table, write_trace, MetricsRow, TABLE_HEADER};
pub use run::{payload_sweep, pd_mismatch_sweep, run_scenario, run_trial, Controller, ScenarioResult, TraceRecord, TrialResult};
pub use scenario::{Scenario, ScenarioKind, IMPACT_PULSE_S};

use crate::env::EnvError;
use crate::trainer::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl EvalError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> EvalError {
        EvalError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
