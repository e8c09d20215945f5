use super::{
    check_d, identity, max_feasible_d, package, preflight, window_floor, Prepared, PreprocessedDataset,
    TransformError, TransformMetadata, TransformOptions,
};
use crate::fp::{self, MAX_REGION, MIN_REGION};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplyShiftMetadata {
    /// Exponent region of the aligned input.
    pub region: i32,
    pub d: u32,
    /// Shift of the first iteration; zero when no valid shift exists.
    pub a_1: f64,
    pub iterations: u32,
}

/// Shift added after doubling a value of `region`:
/// `2^(region + 1 - d) - 2 ulp(2^(region + 1))`, rounded down until its low
/// mantissa bits satisfy the within-region condition. `None` when no positive
/// shift survives.
pub fn multiply_shift_shift(region: i32, d: u32) -> Option<f64> {
    if !(MIN_REGION..MAX_REGION).contains(&region) || !(1..=fp::MANTISSA_BITS).contains(&d) {
        return None;
    }
    let target = region + 1;
    let raw = fp::pow2(target - d as i32) - 2.0 * fp::ulp(fp::pow2(target)).ok()?;
    if raw.is_nan() || raw <= 0.0 || !fp::is_normal_bits(raw) {
        return None;
    }
    let shift_region = fp::region_of(raw);
    let cleared = fp::within_region_cleared_bits((target - shift_region) as u32)?;
    let mantissa = fp::mantissa_of(raw) & !((1u64 << cleared) - 1);
    Some(fp::from_region_parts(shift_region, mantissa))
}

fn transform(
    values: &[f64],
    region: i32,
    d: u32,
    opts: &TransformOptions,
) -> Result<(Vec<f64>, u32), TransformError> {
    let floor = window_floor(d);
    let mut out = values.to_vec();
    let mut iterations = 0u32;
    loop {
        let current = region + iterations as i32;
        let pending: Vec<usize> = (0..out.len())
            .filter(|&i| fp::region_of(out[i]) == current && fp::mantissa_of(out[i]) < floor)
            .collect();
        if pending.is_empty() {
            return Ok((out, iterations));
        }
        if current >= MAX_REGION {
            return Err(TransformError::RangeExhausted { region: current + 1 });
        }
        let Some(shift) = multiply_shift_shift(current, d).filter(|_| iterations < opts.max_iterations)
        else {
            return Err(TransformError::NonConvergence {
                iterations,
                max_feasible_d: 0,
            });
        };
        if opts.checked
            && !(fp::is_lossless_mul_factor(2.0)
                && fp::is_lossless_add_within_region(shift, current + 1).unwrap_or(false))
        {
            return Err(TransformError::PredicateViolation(format!(
                "shift {shift:e} into region {}",
                current + 1
            )));
        }
        for i in pending {
            out[i] = 2.0 * out[i] + shift;
        }
        iterations += 1;
    }
}

fn transform_reporting(
    values: &[f64],
    region: i32,
    d: u32,
    opts: &TransformOptions,
) -> Result<(Vec<f64>, u32), TransformError> {
    match transform(values, region, d, opts) {
        Err(TransformError::NonConvergence { iterations, .. }) => Err(TransformError::NonConvergence {
            iterations,
            max_feasible_d: max_feasible_d(d, |dd| transform(values, region, dd, opts).is_ok()),
        }),
        other => other,
    }
}

pub(crate) fn forward_with(
    ds: &[f64],
    d: u32,
    opts: &TransformOptions,
) -> Result<PreprocessedDataset, TransformError> {
    check_d(d)?;
    match preflight(ds)? {
        Prepared::Identity(v) => Ok(identity(v)),
        Prepared::Aligned { values, record } => {
            let region = record.reference();
            let (out, iterations) = transform_reporting(&values, region, d, opts)?;
            let meta = MultiplyShiftMetadata {
                region,
                d,
                a_1: multiply_shift_shift(region, d).unwrap_or(0.0),
                iterations,
            };
            Ok(package(out, record, TransformMetadata::MulShift(meta)))
        }
    }
}

pub fn multiply_shift_forward(ds: &[f64], d: u32) -> Result<PreprocessedDataset, TransformError> {
    forward_with(ds, d, &TransformOptions::default())
}

pub fn multiply_shift_inverse(pd: &PreprocessedDataset) -> Result<Vec<f64>, TransformError> {
    if !matches!(pd.metadata, TransformMetadata::MulShift(_)) {
        return Err(TransformError::Integrity("not a multiply-shift dataset".into()));
    }
    super::inverse(pd)
}

pub(crate) fn inverse_values(
    values: &[f64],
    meta: &MultiplyShiftMetadata,
    opts: &TransformOptions,
) -> Result<Vec<f64>, TransformError> {
    check_d(meta.d).map_err(|e| TransformError::Integrity(e.to_string()))?;
    if !(MIN_REGION..=MAX_REGION).contains(&meta.region) {
        return Err(TransformError::Integrity(format!("region {}", meta.region)));
    }
    let expected = multiply_shift_shift(meta.region, meta.d).unwrap_or(0.0);
    if expected.to_bits() != meta.a_1.to_bits() {
        return Err(TransformError::Integrity(format!(
            "first shift {:e} does not match d = {} in region {}",
            meta.a_1, meta.d, meta.region
        )));
    }
    let floor = window_floor(meta.d);
    let top = meta.region as i64 + i64::from(meta.iterations);
    values
        .iter()
        .enumerate()
        .map(|(index, &y)| {
            let bad = |why: &str| TransformError::Integrity(format!("value {y:e} at index {index}: {why}"));
            if y.is_nan() || y <= 0.0 || !fp::is_normal_bits(y) {
                return Err(bad("not a positive normal value"));
            }
            let r = fp::region_of(y);
            if i64::from(r) > top || r < meta.region {
                return Err(bad("outside the transformed regions"));
            }
            if fp::mantissa_of(y) < floor {
                return Err(bad("outside the target window"));
            }
            let mut x = y;
            for current in (meta.region..r).rev() {
                let shift =
                    multiply_shift_shift(current, meta.d).ok_or_else(|| bad("no shift for region"))?;
                if opts.checked && !fp::is_lossless_add_within_region(shift, current + 1).unwrap_or(false) {
                    return Err(TransformError::PredicateViolation(format!("shift {shift:e}")));
                }
                let t = x - shift;
                if fp::region_of(t) != current + 1 {
                    return Err(bad("shift leaves the region"));
                }
                x = t * 0.5;
                if fp::mantissa_of(x) >= floor {
                    return Err(bad("was already inside the target window"));
                }
            }
            Ok(x)
        })
        .collect()
}
