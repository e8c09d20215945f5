use std::collections::BTreeMap;

use super::TransformError;
use crate::bitpack::Bitmap;
use crate::fp::{self, MAX_REGION, MIN_REGION};

/// Original exponents and zero positions of an aligned dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentRecord {
    total_len: usize,
    reference: i32,
    /// Original region minus `reference`, one entry per nonzero sample.
    deltas: Vec<i32>,
    /// Set bits mark samples equal to `+0.0`; `None` when there are none.
    zeros: Option<Bitmap>,
}

impl AlignmentRecord {
    pub fn new(
        total_len: usize,
        reference: i32,
        deltas: Vec<i32>,
        zeros: Option<Bitmap>,
    ) -> Result<Self, TransformError> {
        if !(MIN_REGION..=MAX_REGION).contains(&reference) {
            return Err(TransformError::Integrity(format!(
                "reference region {reference} out of range"
            )));
        }
        let zero_count = match &zeros {
            Some(z) if z.len() != total_len => {
                return Err(TransformError::Integrity(format!(
                    "zero bitmap has {} bits for {total_len} samples",
                    z.len()
                )))
            }
            Some(z) => z.count_ones(),
            None => 0,
        };
        if zero_count + deltas.len() != total_len {
            return Err(TransformError::Integrity(format!(
                "{} deltas and {zero_count} zeros do not add up to {total_len} samples",
                deltas.len()
            )));
        }
        if let Some(bad) = deltas
            .iter()
            .find(|&&d| !(MIN_REGION..=MAX_REGION).contains(&(reference + d)))
        {
            return Err(TransformError::Integrity(format!(
                "exponent delta {bad} leaves the finite range"
            )));
        }
        Ok(Self {
            total_len,
            reference,
            deltas,
            zeros: zeros.filter(|z| z.count_ones() > 0),
        })
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn reference(&self) -> i32 {
        self.reference
    }

    pub fn deltas(&self) -> &[i32] {
        &self.deltas
    }

    pub fn zeros(&self) -> Option<&Bitmap> {
        self.zeros.as_ref()
    }

    /// No zeros and no rescaled sample: the record carries no information.
    pub fn is_trivial(&self) -> bool {
        self.zeros.is_none() && self.deltas.iter().all(|&d| d == 0)
    }
}

/// Rescales every nonzero value into the most common exponent region (the
/// lowest one on ties) by rewriting its exponent field, and drops zeros.
pub fn align_exponents(ds: &[f64]) -> Result<(Vec<f64>, AlignmentRecord), TransformError> {
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    let mut zeros = Bitmap::zeros(ds.len());
    for (index, &value) in ds.iter().enumerate() {
        if value.to_bits() == 0 {
            zeros.set(index, true);
        } else if value.is_sign_positive() && fp::is_normal_bits(value) {
            *counts.entry(fp::region_of(value)).or_default() += 1;
        } else {
            return Err(TransformError::Unsupported { index, value });
        }
    }
    // max_by_key keeps the last maximum, so walk regions from the top down
    let reference = counts.iter().rev().max_by_key(|(_, &c)| c).map_or(0, |(&r, _)| r);
    let mut values = Vec::with_capacity(ds.len());
    let mut deltas = Vec::with_capacity(ds.len());
    for &value in ds.iter().filter(|v| v.to_bits() != 0) {
        deltas.push(fp::region_of(value) - reference);
        values.push(fp::from_region_parts(reference, fp::mantissa_of(value)));
    }
    let record = AlignmentRecord::new(ds.len(), reference, deltas, Some(zeros))?;
    Ok((values, record))
}

/// Undoes [`align_exponents`].
pub fn restore_exponents(values: &[f64], record: &AlignmentRecord) -> Result<Vec<f64>, TransformError> {
    if values.len() != record.deltas.len() {
        return Err(TransformError::Integrity(format!(
            "{} values for {} exponent deltas",
            values.len(),
            record.deltas.len()
        )));
    }
    let mut out = Vec::with_capacity(record.total_len);
    let mut nonzero = values.iter().zip(&record.deltas);
    for i in 0..record.total_len {
        if record.zeros.as_ref().is_some_and(|z| z.get(i)) {
            out.push(0.0);
            continue;
        }
        let (&v, &delta) = nonzero
            .next()
            .ok_or_else(|| TransformError::Integrity("missing value".into()))?;
        if v.is_nan() || v <= 0.0 || !fp::is_normal_bits(v) || fp::region_of(v) != record.reference {
            return Err(TransformError::Integrity(format!(
                "value {v:e} at index {i} is not in region {}",
                record.reference
            )));
        }
        out.push(fp::from_region_parts(
            record.reference + delta,
            fp::mantissa_of(v),
        ));
    }
    Ok(out)
}
