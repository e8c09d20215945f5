//! Benchmark harness: CSV ingestion, parameter sweeps, reports and
//! round-trip verification.

mod ingest;
mod report;
mod sweep;
pub mod synth;
mod verify;

use std::path::PathBuf;

use thiserror::Error;

use crate::fp::MANTISSA_BITS;
use crate::transforms::{Params, Technique};

pub use ingest::{ingest, ingest_path, read_column, ColumnSelector, IngestError};
pub use report::{CompressionReport, ReportFormat, ReportRow, CSV_HEADER};
pub use sweep::{evaluate, sweep, sweep_values, SweepOptions};
pub use verify::{first_mismatch, verify, verify_with, Mismatch, VerifyOutcome};

/// Rows read from the input when no limit is given.
pub const DEFAULT_LIMIT: usize = 1000;
pub const DEFAULT_BINS_K: [usize; 4] = [1, 2, 8, 32];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("round trip failed for {technique} {param}: {mismatch}")]
    RoundTrip {
        technique: Technique,
        param: String,
        mismatch: Mismatch,
    },
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub column: ColumnSelector,
    pub limit: usize,
    pub techniques: Vec<Technique>,
    /// Inclusive range of `d`.
    pub d_range: (u32, u32),
    pub bins_k: Vec<usize>,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    pub checked: bool,
    pub timing: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, column: ColumnSelector) -> Self {
        Self {
            input: input.into(),
            column,
            limit: DEFAULT_LIMIT,
            techniques: Technique::ALL.to_vec(),
            d_range: (1, MANTISSA_BITS),
            bins_k: DEFAULT_BINS_K.to_vec(),
            output: None,
            format: ReportFormat::Csv,
            checked: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.limit == 0 {
            return Err(BenchError::Config("row limit must be at least 1".into()));
        }
        let (a, b) = self.d_range;
        if a == 0 || b > MANTISSA_BITS || a > b {
            return Err(BenchError::Config(format!(
                "d range {a}:{b} must satisfy 1 <= A <= B <= {MANTISSA_BITS}"
            )));
        }
        if self.techniques.is_empty() {
            return Err(BenchError::Config("no technique selected".into()));
        }
        if let Some(t) = self.techniques.iter().find(|t| **t == Technique::Identity) {
            return Err(BenchError::Config(format!("{t} is not a sweepable technique")));
        }
        if self.techniques.contains(&Technique::Bins) && (self.bins_k.is_empty() || self.bins_k.contains(&0))
        {
            return Err(BenchError::Config(
                "bins k list must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }

    /// Grid points in report order: techniques as configured, then `k`, then `d`.
    pub fn grid(&self) -> Vec<Params> {
        grid(&self.techniques, self.d_range, &self.bins_k)
    }
}

pub fn grid(techniques: &[Technique], d_range: (u32, u32), bins_k: &[usize]) -> Vec<Params> {
    let ds = d_range.0..=d_range.1;
    let mut out = Vec::new();
    for &t in techniques {
        match t {
            Technique::Bins => {
                for &k in bins_k {
                    out.extend(ds.clone().map(|d| Params::Bins { k, d }));
                }
            }
            Technique::MulShift => out.extend(ds.clone().map(|d| Params::MulShift { d })),
            Technique::EvenOdd => out.extend(ds.clone().map(|d| Params::EvenOdd { d })),
            Technique::Evenness => out.extend(ds.clone().map(|d| Params::Evenness { d })),
            Technique::Identity => {}
        }
    }
    out
}

/// Parses `A:B` or a single `D`.
pub fn parse_d_range(s: &str) -> Result<(u32, u32), String> {
    let parse = |p: &str| p.trim().parse::<u32>().map_err(|e| format!("`{p}`: {e}"));
    match s.split_once(':') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let d = parse(s)?;
            Ok((d, d))
        }
    }
}
