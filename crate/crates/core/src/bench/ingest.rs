use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::RunConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    /// Digits select by zero-based index unless a header has that exact name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Name(n) => write!(f, "`{n}`"),
            ColumnSelector::Index(i) => write!(f, "#{i}"),
        }
    }
}

/// Rows are numbered from 1, counting data rows only.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {column} not found; header is [{header}]")]
    MissingColumn { column: ColumnSelector, header: String },
    #[error("row {row}: cannot parse `{text}` as a finite number")]
    Parse { row: usize, text: String },
    #[error("row {row}: negative value {text} (only non-negative values are supported)")]
    Negative { row: usize, text: String },
    #[error("row {row}: missing cell for column {column}")]
    MissingCell { row: usize, column: ColumnSelector },
    #[error("no data rows")]
    Empty,
}

fn resolve(header: &csv::StringRecord, column: &ColumnSelector) -> Option<usize> {
    match column {
        ColumnSelector::Name(name) => header.iter().position(|h| h.trim() == name),
        ColumnSelector::Index(i) => header
            .iter()
            .position(|h| h.trim() == i.to_string())
            .or_else(|| (*i < header.len()).then_some(*i)),
    }
}

/// Reads the first `limit` values of one column from CSV with a header row.
pub fn read_column<R: Read>(
    reader: R,
    column: &ColumnSelector,
    limit: usize,
) -> Result<Vec<f64>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let idx = resolve(&header, column).ok_or_else(|| IngestError::MissingColumn {
        column: column.clone(),
        header: header.iter().collect::<Vec<_>>().join(", "),
    })?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().take(limit).enumerate() {
        let row = i + 1;
        let record = record?;
        let text = record
            .get(idx)
            .ok_or_else(|| IngestError::MissingCell {
                row,
                column: column.clone(),
            })?
            .trim();
        let value: f64 =
            text.parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| IngestError::Parse {
                    row,
                    text: text.to_string(),
                })?;
        if value.is_sign_negative() {
            return Err(IngestError::Negative {
                row,
                text: text.to_string(),
            });
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(out)
}

pub fn ingest_path(path: &Path, column: &ColumnSelector, limit: usize) -> Result<Vec<f64>, IngestError> {
    read_column(std::fs::File::open(path)?, column, limit)
}

pub fn ingest(config: &RunConfig) -> Result<Vec<f64>, IngestError> {
    ingest_path(&config.input, &config.column, config.limit)
}
