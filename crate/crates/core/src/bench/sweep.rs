use std::time::Instant;

use rayon::prelude::*;

use super::report::{CompressionReport, ReportRow};
use super::verify::{check_roundtrip, Mismatch};
use super::{ingest, BenchError, RunConfig};
use crate::codec;
use crate::fp::shared_bits;
use crate::gd::{compression_ratio, gd_compress, gd_decompress, GdArchive};
use crate::transforms::{self, Params, TransformError, TransformOptions};

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub checked: bool,
    pub timing: bool,
}

/// Archive bytes for `values`, checked to unpack bit-exactly.
fn archive_len(values: &[f64]) -> Result<usize, Mismatch> {
    if values.is_empty() {
        return Ok(0);
    }
    let fail = |detail: String| Mismatch {
        stage: "archive",
        index: None,
        expected: None,
        actual: None,
        detail,
    };
    let bytes = gd_compress(values).map_err(|e| fail(e.to_string()))?.to_bytes();
    let back = GdArchive::from_bytes(&bytes)
        .and_then(|a| gd_decompress(&a))
        .map_err(|e| fail(e.to_string()))?;
    if let Some((index, expected, actual)) = super::first_mismatch(values, &back) {
        return Err(Mismatch {
            index: Some(index),
            expected,
            actual,
            ..fail(String::new())
        });
    }
    Ok(bytes.len())
}

fn ratio(bytes: usize, metadata: usize, n: usize) -> f64 {
    compression_ratio(8 * bytes as u64, 8 * metadata as u64, 64 * n as u64).expect("non-empty dataset")
}

/// Runs one grid point. Transform failures become a status; a failed round
/// trip is an error because no unverified row is ever reported.
pub fn evaluate(
    values: &[f64],
    params: Params,
    cr_noprep: f64,
    opts: SweepOptions,
) -> Result<ReportRow, BenchError> {
    let topts = TransformOptions {
        checked: opts.checked,
        ..Default::default()
    };
    let start = Instant::now();
    let mut row = ReportRow {
        technique: params.technique().to_string(),
        param: params.to_string(),
        cr_prep: None,
        cr_noprep,
        delta_cr: None,
        z: None,
        s_m: None,
        s_e: None,
        s_tot: None,
        iterations: None,
        status: String::new(),
        wall_ms: None,
        roundtrip_ok: None,
    };
    let round_trip_error = |mismatch| BenchError::RoundTrip {
        technique: params.technique(),
        param: params.to_string(),
        mismatch,
    };
    match transforms::forward_with(values, params, &topts) {
        Err(e) => {
            row.status = e.kind().to_string();
            if let TransformError::NonConvergence { iterations, .. } = e {
                row.iterations = Some(iterations);
            }
        }
        Ok(pd) => {
            check_roundtrip(values, &pd, &topts, |_| {}).map_err(round_trip_error)?;
            let compressed = archive_len(&pd.values).map_err(round_trip_error)?;
            let metadata = codec::metadata_size_bytes(&pd);
            let cr_prep = ratio(compressed, metadata, values.len());
            row.cr_prep = Some(cr_prep);
            row.delta_cr = Some((cr_prep - cr_noprep) / cr_noprep);
            row.z = Some(metadata as f64 / compressed as f64);
            if let Ok(s) = shared_bits(&pd.values) {
                row.s_m = Some(s.s_m);
                row.s_e = Some(s.s_e);
                row.s_tot = Some(s.s_tot);
            }
            row.iterations = Some(pd.metadata.iterations());
            row.status = "ok".into();
            row.roundtrip_ok = Some(true);
        }
    }
    if opts.timing {
        row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(row)
}

/// Evaluates every grid point in parallel; rows keep grid order.
pub fn sweep_values(
    values: &[f64],
    grid: &[Params],
    opts: SweepOptions,
) -> Result<CompressionReport, BenchError> {
    if values.is_empty() {
        return Err(BenchError::Config("empty dataset".into()));
    }
    let noprep = archive_len(values).map_err(|mismatch| BenchError::RoundTrip {
        technique: transforms::Technique::Identity,
        param: String::new(),
        mismatch,
    })?;
    let cr_noprep = ratio(noprep, 0, values.len());
    let rows = grid
        .par_iter()
        .map(|&p| evaluate(values, p, cr_noprep, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompressionReport {
        n: values.len(),
        rows,
    })
}

pub fn sweep(config: &RunConfig) -> Result<CompressionReport, BenchError> {
    config.validate()?;
    let values = ingest(config)?;
    let opts = SweepOptions {
        checked: config.checked,
        timing: config.timing,
    };
    sweep_values(&values, &config.grid(), opts)
}
