//! Per-slot metric traces and their CSV/JSON serialization.
//!
//! A [`MetricsTrace`] is the complete slot-by-slot record of one
//! replication. The CSV layout is a fixed contract:
//!
//! ```text
//! t,mse,mse_avg,active,active_avg,lambda,theta_0,…,extra_reads[,tracker extras…]
//! ```
//!
//! with one `theta_i` column per learned parameter component (none when the
//! tracker learns no parameter) and any tracker-specific columns appended
//! after `extra_reads`. The `*_avg` columns are running means of their
//! instant column, so they are recomputable from the same file. Floats are
//! written with Rust's shortest round-trip formatting: parsing a value back
//! yields the exact bits, and re-running the same scenario and seed
//! reproduces the file byte for byte.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::tracker::SlotRecord;
use crate::{Error, Result};

/// The slot records of one replication plus the column metadata needed to
/// render them.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTrace {
    theta_dim: usize,
    extra_columns: Vec<String>,
    records: Vec<SlotRecord>,
}

impl MetricsTrace {
    pub fn new(theta_dim: usize, extra_columns: Vec<String>) -> Self {
        Self { theta_dim, extra_columns, records: Vec::new() }
    }

    /// Appends one slot, checking the record's shape against the columns.
    pub fn push(&mut self, record: SlotRecord) {
        assert_eq!(record.theta.len(), self.theta_dim, "parameter width changed mid-trace");
        assert_eq!(record.extras.len(), self.extra_columns.len(), "extras width changed mid-trace");
        self.records.push(record);
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean of the instantaneous squared errors.
    pub fn mse_average(&self) -> f64 {
        mean(self.records.iter().map(|r| r.mse))
    }

    /// Mean number of active sensors per slot.
    pub fn active_average(&self) -> f64 {
        mean(self.records.iter().map(|r| r.active as f64))
    }

    /// Total sensors read beyond the selected subsets, exact.
    pub fn extra_reads_total(&self) -> u64 {
        self.records.iter().map(|r| r.extra_reads as u64).sum()
    }

    /// The contracted header row.
    pub fn header(&self) -> String {
        let mut cols = vec!["t", "mse", "mse_avg", "active", "active_avg", "lambda"].join(",");
        for i in 0..self.theta_dim {
            cols.push_str(&format!(",theta_{i}"));
        }
        cols.push_str(",extra_reads");
        for label in &self.extra_columns {
            cols.push_str(",");
            cols.push_str(label);
        }
        cols
    }

    /// Writes the trace as CSV (header + one row per slot).
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        let mut mse_sum = 0.0;
        let mut active_sum = 0.0;
        for (i, r) in self.records.iter().enumerate() {
            mse_sum += r.mse;
            active_sum += r.active as f64;
            let k = (i + 1) as f64;
            let mut row = format!(
                "{},{},{},{},{},{}",
                r.t,
                r.mse,
                mse_sum / k,
                r.active,
                active_sum / k,
                r.lambda
            );
            for v in &r.theta {
                row.push_str(&format!(",{v}"));
            }
            row.push_str(&format!(",{}", r.extra_reads));
            for v in &r.extras {
                row.push_str(&format!(",{v}"));
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    /// The CSV as a string (for hashing and byte-identity tests).
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Writes the CSV to a file path.
    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0u64;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Parses a metrics CSV back into its header labels and numeric rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty metrics file".into()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|e| Error::Config(format!("row {}: bad number {cell:?}: {e}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Final statistics of one replication, derived purely from its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub slots: u64,
    /// Mean of the `mse` column.
    pub mse_avg: f64,
    /// Mean of the `active` column.
    pub active_avg: f64,
    pub final_lambda: f64,
    pub final_theta: Vec<f64>,
    /// Exact total of the `extra_reads` column.
    pub extra_reads_total: u64,
    pub extra_reads_per_slot: f64,
    /// First slot after which the running active-count average stays within
    /// 5% of the target for the rest of the run.
    pub active_converged_at: Option<u64>,
}

impl SeedSummary {
    pub fn from_trace(seed: u64, trace: &MetricsTrace, n_bar: f64) -> Self {
        let slots = trace.len() as u64;
        let last = trace.records().last();
        let tol = 0.05 * n_bar.max(1.0);
        let mut running = 0.0;
        let mut last_outside = None;
        for (i, r) in trace.records().iter().enumerate() {
            running += r.active as f64;
            let avg = running / (i + 1) as f64;
            if (avg - n_bar).abs() > tol {
                last_outside = Some(i as u64);
            }
        }
        let active_converged_at = match (slots, last_outside) {
            (0, _) => None,
            (_, None) => Some(0),
            (_, Some(i)) if i + 1 < slots => Some(i + 1),
            _ => None,
        };
        Self {
            seed,
            slots,
            mse_avg: trace.mse_average(),
            active_avg: trace.active_average(),
            final_lambda: last.map_or(0.0, |r| r.lambda),
            final_theta: last.map_or_else(Vec::new, |r| r.theta.clone()),
            extra_reads_total: trace.extra_reads_total(),
            extra_reads_per_slot: if slots == 0 {
                0.0
            } else {
                trace.extra_reads_total() as f64 / slots as f64
            },
            active_converged_at,
        }
    }
}
