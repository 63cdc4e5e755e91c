//! CSV artifacts and experiment summaries.
//!
//! Every artifact is a registered schema with a fixed header. Reals are
//! rendered with 17 significant digits so a double round-trips exactly, and
//! emission is deterministic: identical records give byte-identical files.

use crate::epoch::RunRecord;
use crate::loss::Outcome;
use crate::process::Input;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema `{schema}` expects {expected} fields, row has {got}")]
    Arity { schema: &'static str, expected: usize, got: usize },
}

/// Registered artifact schemas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaId {
    /// Per-step learner log.
    Run,
    /// Partial averages of the excess loss.
    ExcessCurve,
    /// Family-prefix approximation curve.
    DensityProfile,
    /// Shrinking-set frequency profile.
    ConditionProfile,
    /// Per-trial regret bound audit.
    HedgeBench,
}

impl SchemaId {
    pub fn header(self) -> &'static str {
        match self {
            SchemaId::Run => {
                "t,block,x,expert_index,y_hat,y,step_loss,comparator_loss,cum_loss,cum_comparator_loss"
            }
            SchemaId::ExcessCurve => "t,avg_excess_loss",
            SchemaId::DensityProfile => "m,best_avg_loss",
            SchemaId::ConditionProfile => "k,mean_tail_max",
            SchemaId::HedgeBench => "trial,learner_loss,best_expert_loss,bound,violated",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemaId::Run => "run",
            SchemaId::ExcessCurve => "excess_curve",
            SchemaId::DensityProfile => "density_profile",
            SchemaId::ConditionProfile => "condition_profile",
            SchemaId::HedgeBench => "hedge_bench",
        }
    }

    pub fn columns(self) -> usize {
        self.header().split(',').count()
    }
}

/// 17-significant-digit rendering: lossless for every finite double.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_outcome(y: &Outcome) -> String {
    match y {
        Outcome::Label(k) => k.to_string(),
        Outcome::Real(v) => format_real(*v),
    }
}

/// Cube points render coordinate reals joined by `;`; naturals render plain.
pub fn format_input(x: &Input) -> String {
    match x {
        Input::Point(p) => {
            let mut s = String::new();
            for (i, v) in p.iter().enumerate() {
                if i > 0 {
                    s.push(';');
                }
                let _ = write!(s, "{}", format_real(*v));
            }
            s
        }
        Input::Nat(m) => m.to_string(),
    }
}

/// Field rows for the `run` schema.
pub fn run_rows(records: &[RunRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                r.block.to_string(),
                format_input(&r.x),
                r.expert_index.to_string(),
                format_outcome(&r.y_hat),
                format_outcome(&r.y),
                format_real(r.step_loss),
                format_real(r.comparator_loss),
                format_real(r.cum_loss),
                format_real(r.cum_comparator_loss),
            ]
        })
        .collect()
}

/// Field rows for curve-like `(index, value)` schemas.
pub fn indexed_rows(values: impl IntoIterator<Item = (u64, f64)>) -> Vec<Vec<String>> {
    values
        .into_iter()
        .map(|(i, v)| vec![i.to_string(), format_real(v)])
        .collect()
}

/// Writes `rows` under the schema's header. Rows must match the schema's
/// column count; an empty row set produces a header-only file.
pub fn emit_csv(schema: SchemaId, rows: &[Vec<String>], path: &Path) -> Result<(), ReportError> {
    let mut text = String::with_capacity(rows.len() * 64 + 64);
    text.push_str(schema.header());
    text.push('\n');
    for row in rows {
        if row.len() != schema.columns() {
            return Err(ReportError::Arity {
                schema: schema.name(),
                expected: schema.columns(),
                got: row.len(),
            });
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

/// One verdict row of an experiment summary.
#[derive(Debug, Clone)]
pub struct CheckVerdict {
    pub check: &'static str,
    pub pass: bool,
    /// The measured statistic the verdict compares against the threshold.
    pub statistic: f64,
    pub threshold: f64,
    pub seeds: usize,
    pub wall_clock: Duration,
}

/// Aggregated experiment result: one verdict per enabled check, plus any
/// per-seed failures (a failed seed aborts only itself).
#[derive(Debug, Clone, Default)]
pub struct SummaryReport {
    pub verdicts: Vec<CheckVerdict>,
    pub seed_errors: Vec<(u64, String)>,
    /// Non-fatal observations, e.g. streams that ended before the horizon.
    pub notes: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl SummaryReport {
    pub fn all_pass(&self) -> bool {
        self.seed_errors.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    /// Human-readable rendering, one line per verdict. Wall-clock lives
    /// here (and only here): the CSV artifacts stay byte-reproducible.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            let _ = writeln!(
                s,
                "check {:<12} {}  statistic={:.6} threshold={:.6} seeds={} wall_clock_s={:.3}",
                v.check,
                if v.pass { "PASS" } else { "FAIL" },
                v.statistic,
                v.threshold,
                v.seeds,
                v.wall_clock.as_secs_f64(),
            );
        }
        for (seed, err) in &self.seed_errors {
            let _ = writeln!(s, "seed {seed} aborted: {err}");
        }
        for note in &self.notes {
            let _ = writeln!(s, "note: {note}");
        }
        if self.verdicts.is_empty() && self.seed_errors.is_empty() {
            s.push_str("no checks enabled\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_exactly() {
        for &x in &[0.1, 1.0 / 3.0, 2.0_f64.sqrt(), 1e-300, 123456.789, 0.0] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn empty_rows_emit_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(SchemaId::ExcessCurve, &[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,avg_excess_loss\n");
    }

    #[test]
    fn single_row_emits_two_lines_and_reemission_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let rows = indexed_rows([(1, 0.5)]);
        emit_csv(SchemaId::ExcessCurve, &rows, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 2);
        emit_csv(SchemaId::ExcessCurve, &rows, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let err = emit_csv(SchemaId::Run, &[vec!["1".into()]], &path).unwrap_err();
        assert!(matches!(err, ReportError::Arity { expected: 10, got: 1, .. }));
    }

    #[test]
    fn unwritable_path_reports_the_path() {
        let err = emit_csv(SchemaId::ExcessCurve, &[], Path::new("/nonexistent-dir/x.csv"))
            .unwrap_err();
        match err {
            ReportError::Io { path, .. } => assert!(path.contains("nonexistent-dir")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
