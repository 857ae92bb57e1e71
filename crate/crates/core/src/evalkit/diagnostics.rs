use serde::{Deserialize, Serialize};

use super::run::TraceRecord;

/// Summary of the learned and analytic force estimates and the direction of
/// the compensation foot force over one or more traces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub frames: usize,
    /// Pearson correlation of true and learned F_ext_x.
    pub correlation_est: f64,
    /// Pearson correlation of true and momentum-observer F_ext_x.
    pub correlation_gm: f64,
    /// Mean |F_ext_est| over frames without an applied force (N).
    pub quiet_mean_abs_est: f64,
    /// Disturbed frames with at least one stance leg.
    pub disturbed_stance_frames: usize,
    /// Fraction of those where Σ F_ee,x has the opposite sign to F_ext_x.
    pub oppose_fraction: f64,
    /// Fraction where it has the same sign.
    pub align_fraction: f64,
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let (ma, mb) = (a[..n].iter().sum::<f64>() / n as f64, b[..n].iter().sum::<f64>() / n as f64);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (x, y) = (a[i] - ma, b[i] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Diagnostics over the control-step rows of the given traces.
pub fn observer_diagnostics<'a>(traces: impl IntoIterator<Item = &'a [TraceRecord]>) -> DiagnosticsReport {
    let rows: Vec<&TraceRecord> = traces.into_iter().flat_map(|t| t.iter().filter(|r| r.step > 0)).collect();
    let truth: Vec<f64> = rows.iter().map(|r| r.f_ext_true[0]).collect();
    let est: Vec<f64> = rows.iter().map(|r| r.f_ext_est[0]).collect();
    let gm: Vec<f64> = rows.iter().map(|r| r.f_ext_gm[0]).collect();
    let quiet: Vec<f64> =
        rows.iter().filter(|r| r.f_ext_true == [0.0, 0.0]).map(|r| r.f_ext_est[0].hypot(r.f_ext_est[1])).collect();
    let disturbed: Vec<&&TraceRecord> = rows.iter().filter(|r| r.f_ext_true[0] != 0.0 && r.stance.iter().any(|s| *s)).collect();
    let sign_product = |r: &&&TraceRecord| r.f_ee_stance[0] * r.f_ext_true[0];
    let oppose = disturbed.iter().filter(|r| sign_product(r) < 0.0).count();
    let align = disturbed.iter().filter(|r| sign_product(r) > 0.0).count();
    let nd = disturbed.len().max(1) as f64;
    DiagnosticsReport {
        frames: rows.len(),
        correlation_est: pearson(&truth, &est),
        correlation_gm: pearson(&truth, &gm),
        quiet_mean_abs_est: if quiet.is_empty() { 0.0 } else { quiet.iter().sum::<f64>() / quiet.len() as f64 },
        disturbed_stance_frames: disturbed.len(),
        oppose_fraction: oppose as f64 / nd,
        align_fraction: align as f64 / nd,
    }
}
