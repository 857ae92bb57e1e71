use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::Metrics;
use super::run::{ScenarioResult, TraceRecord};
use super::EvalError;

/// Column names of the metrics table, written as its first line.
pub const TABLE_HEADER: &str = "scenario\tmethod\tcommand_m_per_s\ttrials\tsr\tate_m_per_s\tpd_m";

/// One parsed table row.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub method: String,
    pub command_m_per_s: f64,
    pub metrics: Metrics,
}

fn table(results: &[ScenarioResult]) -> String {
    let mut s = String::new();
    writeln!(s, "{TABLE_HEADER}").expect("string write");
    for r in results {
        let m = &r.metrics;
        writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}\t{}", r.scenario.name, r.method, r.scenario.command_m_per_s, m.trials, m.sr, m.ate, m.pd)
            .expect("string write");
    }
    s
}

fn write(path: &Path, contents: &[u8]) -> Result<(), EvalError> {
    std::fs::write(path, contents).map_err(|e| EvalError::io(path, e))
}

/// One JSON object per line.
pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<(), EvalError> {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).map_err(|e| EvalError::io(path, e))?);
        out.push('\n');
    }
    write(path, out.as_bytes())
}

/// Writes `<dir>/<table_name>` and one trace file per trial under
/// `<dir>/traces/`. Returns the paths written, table first.
pub fn export_report(results: &[ScenarioResult], dir: &Path, table_name: &str) -> Result<Vec<PathBuf>, EvalError> {
    std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
    let table_path = dir.join(table_name);
    write(&table_path, table(results).as_bytes())?;
    let mut written = vec![table_path];
    if results.iter().any(|r| !r.trials.is_empty()) {
        let traces = dir.join("traces");
        std::fs::create_dir_all(&traces).map_err(|e| EvalError::io(&traces, e))?;
        for r in results {
            for t in &r.trials {
                let p = traces.join(format!("{}__{}__seed{}.jsonl", r.scenario.name, r.method, t.seed));
                write_trace(&p, &t.trace)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

/// Parse a table written by [`export_report`].
pub fn parse_table(text: &str) -> Result<Vec<MetricsRow>, EvalError> {
    let bad = |line: usize, m: &str| EvalError::InvalidScenario(format!("table line {line}: {m}"));
    let mut lines = text.lines();
    if lines.next() != Some(TABLE_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(bad(i + 2, "expected 7 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
        rows.push(MetricsRow {
            scenario: f[0].to_string(),
            method: f[1].to_string(),
            command_m_per_s: num(f[2])?,
            metrics: Metrics {
                trials: f[3].parse().map_err(|_| bad(i + 2, "bad trial count"))?,
                sr: num(f[4])?,
                ate: num(f[5])?,
                pd: num(f[6])?,
            },
        });
    }
    Ok(rows)
}
