use super::{
    check_d, f64_to_units, identity, leading_ones, package, preflight, units_to_f64, window_floor, Prepared,
    PreprocessedDataset, TransformError, TransformMetadata, TransformOptions, TOP_UNIT,
};
use crate::fp;

#[derive(Debug, Clone, PartialEq)]
pub struct CompactBinsMetadata {
    /// One shift per bin, lowest bin first.
    pub shifts: Vec<f64>,
    /// Index into the sorted unique values where each bin after the first starts.
    pub boundaries: Vec<u32>,
}

impl CompactBinsMetadata {
    pub fn k(&self) -> usize {
        self.shifts.len()
    }
}

fn sorted_unique_mantissas(values: &[f64]) -> Vec<u64> {
    let mut u: Vec<u64> = values.iter().map(|&v| fp::mantissa_of(v)).collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// Boundaries at the `k - 1` widest gaps between consecutive unique values;
/// equal gaps go to the lower one.
fn choose_boundaries(uniq: &[u64], k: usize) -> Vec<u32> {
    let mut gaps: Vec<(u64, usize)> = uniq
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[1] - w[0], i))
        .collect();
    gaps.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut bounds: Vec<u32> = gaps[..k - 1].iter().map(|&(_, i)| (i + 1) as u32).collect();
    bounds.sort_unstable();
    bounds
}

fn bin_of(uniq: &[u64], boundaries: &[u32], u: u64) -> usize {
    let rank = uniq.partition_point(|&v| v < u) as u32;
    boundaries.partition_point(|&b| b <= rank)
}

fn predicate(shift: f64, region: i32, opts: &TransformOptions) -> Result<(), TransformError> {
    if opts.checked && shift != 0.0 && !fp::is_lossless_add_within_region(shift, region).unwrap_or(false) {
        return Err(TransformError::PredicateViolation(format!(
            "shift {shift:e} into region {region}"
        )));
    }
    Ok(())
}

fn transform(
    values: &[f64],
    region: i32,
    k: usize,
    d: u32,
    opts: &TransformOptions,
) -> Result<(Vec<f64>, CompactBinsMetadata), TransformError> {
    let uniq = sorted_unique_mantissas(values);
    if k == 0 || k > uniq.len() {
        return Err(TransformError::InvalidParameter(format!(
            "k = {k} outside [1, {}] unique values",
            uniq.len()
        )));
    }
    let boundaries = choose_boundaries(&uniq, k);
    let starts: Vec<usize> = std::iter::once(0)
        .chain(boundaries.iter().map(|&b| b as usize))
        .collect();
    // Pack bins against the top of the region, highest bin first, keeping
    // every shift a multiple of four ulps.
    let mut shift_units = vec![0u64; k];
    let mut limit = TOP_UNIT;
    for j in (0..k).rev() {
        let end = starts.get(j + 1).copied().unwrap_or(uniq.len());
        let (lo, hi) = (uniq[starts[j]], uniq[end - 1]);
        if limit < hi {
            return Err(TransformError::InfeasibleShift { bin: j });
        }
        shift_units[j] = (limit - hi) & !3;
        limit = (lo + shift_units[j]).saturating_sub(1);
    }
    let packed_low = uniq[0] + shift_units[0];
    if packed_low < window_floor(d) {
        return Err(TransformError::Capacity {
            max_d: leading_ones(packed_low),
        });
    }
    let shifts: Vec<f64> = shift_units.iter().map(|&s| units_to_f64(region, s)).collect();
    for &s in &shifts {
        predicate(s, region, opts)?;
    }
    let out = values
        .iter()
        .map(|&x| {
            let s = shifts[bin_of(&uniq, &boundaries, fp::mantissa_of(x))];
            if s == 0.0 {
                x
            } else {
                x + s
            }
        })
        .collect();
    Ok((out, CompactBinsMetadata { shifts, boundaries }))
}

pub(crate) fn forward_with(
    ds: &[f64],
    k: usize,
    d: u32,
    opts: &TransformOptions,
) -> Result<PreprocessedDataset, TransformError> {
    check_d(d)?;
    if k == 0 {
        return Err(TransformError::InvalidParameter("k must be at least 1".into()));
    }
    match preflight(ds)? {
        Prepared::Identity(v) => Ok(identity(v)),
        Prepared::Aligned { values, record } => {
            let (out, meta) = transform(&values, record.reference(), k, d, opts)?;
            Ok(package(out, record, TransformMetadata::Bins(meta)))
        }
    }
}

pub fn compact_bins_forward(ds: &[f64], k: usize, d: u32) -> Result<PreprocessedDataset, TransformError> {
    forward_with(ds, k, d, &TransformOptions::default())
}

pub fn compact_bins_inverse(pd: &PreprocessedDataset) -> Result<Vec<f64>, TransformError> {
    if !matches!(pd.metadata, TransformMetadata::Bins(_)) {
        return Err(TransformError::Integrity("not a compact bins dataset".into()));
    }
    super::inverse(pd)
}

pub(crate) fn inverse_values(
    values: &[f64],
    meta: &CompactBinsMetadata,
    opts: &TransformOptions,
) -> Result<Vec<f64>, TransformError> {
    let first = values
        .first()
        .ok_or_else(|| TransformError::Integrity("compact bins dataset without values".into()))?;
    let region = fp::region_of(*first);
    if values
        .iter()
        .any(|&v| v.is_nan() || v <= 0.0 || !fp::is_normal_bits(v) || fp::region_of(v) != region)
    {
        return Err(TransformError::Integrity(
            "transformed values span several regions".into(),
        ));
    }
    let uniq = sorted_unique_mantissas(values);
    let k = meta.k();
    if k == 0 || k > uniq.len() || meta.boundaries.len() != k - 1 {
        return Err(TransformError::Integrity(format!(
            "{k} bins and {} boundaries for {} unique values",
            meta.boundaries.len(),
            uniq.len()
        )));
    }
    let mut prev = 0u32;
    for &b in &meta.boundaries {
        if b <= prev || b as usize >= uniq.len() {
            return Err(TransformError::Integrity(format!("bad bin boundary {b}")));
        }
        prev = b;
    }
    let mut shift_units = Vec::with_capacity(k);
    for &s in &meta.shifts {
        match f64_to_units(region, s) {
            Some(u) if u % 4 == 0 => shift_units.push(u),
            _ => return Err(TransformError::Integrity(format!("invalid bin shift {s:e}"))),
        }
        predicate(s, region, opts)?;
    }
    values
        .iter()
        .map(|&y| {
            let u = fp::mantissa_of(y);
            let bin = bin_of(&uniq, &meta.boundaries, u);
            if u < shift_units[bin] {
                return Err(TransformError::Integrity(format!(
                    "value {y:e} lies below the shift of its bin"
                )));
            }
            let s = meta.shifts[bin];
            Ok(if s == 0.0 { y } else { y - s })
        })
        .collect()
}
