//! Structured results of verification runs and their serialization.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Note attached to every report: the holomorphic-curvature scalar used
/// throughout is normalized so the standard Fubini-Study metric has
/// value 4 (twice the other common convention).
pub const NORMALIZATION_NOTE: &str = "holomorphic curvature normalized to H(fubini_study) = 4";

pub fn artifact_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ResidualSummary {
    pub max: f64,
    pub mean: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

impl ResidualSummary {
    pub fn from_slice(values: &[f64]) -> ResidualSummary {
        if values.is_empty() {
            return ResidualSummary::default();
        }
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
            sorted[idx]
        };
        ResidualSummary {
            max: *sorted.last().unwrap(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            q50: q(0.5),
            q90: q(0.9),
            q99: q(0.99),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v}"),
            Cell::I(v) => format!("{v}"),
            Cell::S(s) => s.clone(),
        }
    }
}

/// Row-oriented table carried by comparison reports.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result of one verification run. Reports with the same seed and
/// artifact version serialize to identical bytes; wall-clock time is
/// therefore kept out of the serialized form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub metric: String,
    pub params: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    /// Samples that could not be evaluated (logged, not fatal).
    pub failures: usize,
    pub residuals: ResidualSummary,
    pub tolerance: f64,
    pub pass: bool,
    /// False when the theorem's curvature hypothesis could not be
    /// verified by sampling (the check is then not asserted).
    pub hypothesis_verified: bool,
    pub version: String,
    pub normalization: String,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    #[serde(skip)]
    pub runtime: std::time::Duration,
}

impl Report {
    pub fn from_residuals(
        check: &str,
        metric: &str,
        params: &[f64],
        seed: u64,
        tolerance: f64,
        residuals: &[f64],
        failures: usize,
    ) -> Report {
        let samples = residuals.len() + failures;
        let summary = ResidualSummary::from_slice(residuals);
        let failure_ok = failures * 100 <= samples; // at most 1%
        Report {
            check: check.to_string(),
            metric: metric.to_string(),
            params: params.to_vec(),
            seed,
            samples,
            failures,
            pass: summary.max < tolerance && failure_ok && !residuals.is_empty(),
            residuals: summary,
            tolerance,
            hypothesis_verified: true,
            version: artifact_version(),
            normalization: NORMALIZATION_NOTE.to_string(),
            notes: Vec::new(),
            table: None,
            runtime: std::time::Duration::ZERO,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Report {
        self.notes.push(note.into());
        self
    }

    pub fn with_table(mut self, table: Table) -> Report {
        self.table = Some(table);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    Csv,
    PlotData,
}

impl std::str::FromStr for EmitFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(EmitFormat::Json),
            "csv" => Ok(EmitFormat::Csv),
            "plotdata" => Ok(EmitFormat::PlotData),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

/// Serialize a report deterministically to a writer.
pub fn emit_to(report: &Report, format: EmitFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        EmitFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            out.write_all(b"\n")?;
        }
        EmitFormat::Csv => {
            if let Some(table) = &report.table {
                writeln!(out, "{}", table.columns.join(","))?;
                for row in &table.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            } else {
                writeln!(
                    out,
                    "check,metric,seed,samples,failures,max_residual,mean_residual,tolerance,pass"
                )?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    report.check,
                    report.metric,
                    report.seed,
                    report.samples,
                    report.failures,
                    report.residuals.max,
                    report.residuals.mean,
                    report.tolerance,
                    report.pass
                )?;
            }
        }
        EmitFormat::PlotData => {
            let table = report.table.as_ref().ok_or_else(|| {
                crate::error::Error::Eval("report carries no table to plot".into())
            })?;
            writeln!(out, "# {}", table.columns.join(" "))?;
            for row in &table.rows {
                let poleish = row.iter().any(|c| match c {
                    Cell::F(v) => !v.is_finite(),
                    Cell::S(s) => s == "skipped" || s == "pole",
                    _ => false,
                });
                if poleish {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "# omitted: {}", cells.join(" "))?;
                } else {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(" "))?;
                }
            }
        }
    }
    Ok(())
}

/// Serialize a report deterministically to a file.
pub fn emit(report: &Report, format: EmitFormat, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    emit_to(report, format, &mut file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_quantiles() {
        let vals: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let s = ResidualSummary::from_slice(&vals);
        assert_eq!(s.max, 100.0);
        assert_eq!(s.q50, 50.0);
        assert_eq!(s.q90, 90.0);
        assert_eq!(s.q99, 99.0);
    }

    #[test]
    fn emit_is_deterministic() {
        let r = Report::from_residuals("demo", "euclidean", &[2.0], 7, 1e-9, &[1e-12, 2e-12], 0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        emit_to(&r, EmitFormat::Json, &mut a).unwrap();
        emit_to(&r, EmitFormat::Json, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn failure_rate_gates_pass() {
        let r = Report::from_residuals("demo", "euclidean", &[2.0], 7, 1e-9, &[1e-12; 50], 10);
        assert!(!r.pass);
        let ok = Report::from_residuals("demo", "euclidean", &[2.0], 7, 1e-9, &[1e-12; 200], 2);
        assert!(ok.pass);
    }
}
