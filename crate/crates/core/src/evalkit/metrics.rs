use serde::{Deserialize, Serialize};

use super::run::{TraceRecord, TrialResult};

/// Aggregate over the trials of one scenario point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trials: usize,
    /// Fraction of trials reaching the timeout.
    pub sr: f64,
    /// Mean over trials of each trial's absolute tracking error (m/s).
    pub ate: f64,
    /// Mean over trials of each trial's peak displacement (m).
    pub pd: f64,
}

impl Metrics {
    pub fn from_trials(trials: &[TrialResult]) -> Metrics {
        let n = trials.len().max(1) as f64;
        Metrics {
            trials: trials.len(),
            sr: trials.iter().filter(|t| t.success).count() as f64 / n,
            ate: trials.iter().map(|t| t.ate).sum::<f64>() / n,
            pd: trials.iter().map(|t| t.pd).sum::<f64>() / n,
        }
    }
}

/// Mean |v_x − v_x^cmd| over the control steps of a trace (the t = 0 row is
/// the initial state and is skipped).
pub fn absolute_tracking_error(trace: &[TraceRecord]) -> f64 {
    let steps: Vec<&TraceRecord> = trace.iter().filter(|r| r.step > 0).collect();
    if steps.is_empty() {
        return 0.0;
    }
    steps.iter().map(|r| (r.qd[0] - r.command_m_per_s).abs()).sum::<f64>() / steps.len() as f64
}

/// Largest distance of the trunk from the path starting at the initial
/// position and moving at the commanded velocity.
pub fn peak_displacement(trace: &[TraceRecord]) -> f64 {
    let Some(first) = trace.first() else { return 0.0 };
    let (x0, z0) = (first.q[0], first.q[1]);
    trace
        .iter()
        .map(|r| {
            let dx = r.q[0] - (x0 + r.command_m_per_s * r.t);
            let dz = r.q[1] - z0;
            (dx * dx + dz * dz).sqrt()
        })
        .fold(0.0, f64::max)
}
