//! Invertible preprocessing of non-negative `f64` datasets.
//!
//! Every forward pass runs the same preflight: reject unsupported values,
//! short-circuit bit-identical datasets, then rescale all nonzero samples into
//! a single exponent region ([`align_exponents`]). The techniques then move the
//! aligned values, using only additions and multiplications that can be undone
//! exactly, into the part of the region where the `d` leading mantissa bits
//! are all ones.

mod align;
mod bins;
mod evenness;
mod evenodd;
mod mulshift;

use thiserror::Error;

use crate::fp::{self, FpError, MANTISSA_BITS};

pub use align::{align_exponents, restore_exponents, AlignmentRecord};
pub use bins::{compact_bins_forward, compact_bins_inverse, CompactBinsMetadata};
pub use evenness::{save_evenness_forward, save_evenness_inverse, EvennessMetadata};
pub use evenodd::{
    even_odd_separate_forward, even_odd_separate_inverse, even_odd_trace, nominal_window_step,
    EvenOddSeparateMetadata, IterationWindows,
};
pub use mulshift::{
    multiply_shift_forward, multiply_shift_inverse, multiply_shift_shift, MultiplyShiftMetadata,
};

/// `2^52`, the number of mantissa values in one region.
pub(crate) const REGION_UNITS: u64 = 1 << MANTISSA_BITS;
pub(crate) const TOP_UNIT: u64 = REGION_UNITS - 1;

/// Smallest mantissa of the top-of-region window where the `d` leading
/// mantissa bits are ones.
pub(crate) fn window_floor(d: u32) -> u64 {
    REGION_UNITS - (REGION_UNITS >> d)
}

/// Largest `d` whose top-of-region window contains mantissa `u`.
pub(crate) fn leading_ones(u: u64) -> u32 {
    ((u << (64 - MANTISSA_BITS)) | ((1 << (64 - MANTISSA_BITS)) - 1))
        .leading_ones()
        .min(MANTISSA_BITS)
}

/// `units` multiples of the ulp of `region`, as an exact `f64`.
pub(crate) fn units_to_f64(region: i32, units: u64) -> f64 {
    if units == 0 {
        return 0.0;
    }
    units as f64 * fp::pow2(region - MANTISSA_BITS as i32)
}

/// Inverse of [`units_to_f64`]; `None` unless `x` is a non-negative integer
/// multiple of the ulp of `region` below `2^region`.
pub(crate) fn f64_to_units(region: i32, x: f64) -> Option<u64> {
    let bits = x.to_bits();
    if bits == 0 {
        return Some(0);
    }
    if bits >> 63 != 0 || !x.is_finite() {
        return None;
    }
    // x = sig * 2^(exp - 52) with exp the unbiased exponent of the leading bit
    let (sig, exp) = if fp::is_normal_bits(x) {
        (REGION_UNITS | fp::mantissa_of(x), fp::region_of(x))
    } else {
        (fp::mantissa_of(x), fp::MIN_REGION)
    };
    // normal values must sit in a region strictly below `region`
    if exp > region || (exp == region && fp::is_normal_bits(x)) {
        return None;
    }
    let drop = (region - exp) as u32;
    if drop >= 64 || sig & ((1u64 << drop) - 1) != 0 {
        return None;
    }
    Some(sig >> drop)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Fp(#[from] FpError),
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported value {value:e} at index {index}: only non-negative normal finite values and +0.0 are accepted")]
    Unsupported { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bins do not fit the target window; largest feasible d is {max_d}")]
    Capacity { max_d: u32 },
    #[error("no lossless shift exists for bin {bin}")]
    InfeasibleShift { bin: usize },
    #[error("no convergence after {iterations} iterations; largest feasible d is {max_feasible_d}")]
    NonConvergence { iterations: u32, max_feasible_d: u32 },
    #[error("exponent region {region} would exceed the largest finite region")]
    RangeExhausted { region: i32 },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("lossless predicate violated: {0}")]
    PredicateViolation(String),
}

impl TransformError {
    /// Short machine-readable name, used as the report status.
    pub fn kind(&self) -> &'static str {
        match self {
            TransformError::Fp(_) => "fp_error",
            TransformError::EmptyInput => "empty_input",
            TransformError::Unsupported { .. } => "unsupported",
            TransformError::InvalidParameter(_) => "invalid_parameter",
            TransformError::Capacity { .. } => "capacity",
            TransformError::InfeasibleShift { .. } => "infeasible_shift",
            TransformError::NonConvergence { .. } => "non_convergence",
            TransformError::RangeExhausted { .. } => "range_exhausted",
            TransformError::Integrity(_) => "integrity",
            TransformError::PredicateViolation(_) => "predicate_violation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Bins,
    MulShift,
    EvenOdd,
    Evenness,
    Identity,
}

impl Technique {
    pub const ALL: [Technique; 4] = [
        Technique::Bins,
        Technique::MulShift,
        Technique::EvenOdd,
        Technique::Evenness,
    ];

    pub fn id(self) -> u8 {
        match self {
            Technique::Bins => 0,
            Technique::MulShift => 1,
            Technique::EvenOdd => 2,
            Technique::Evenness => 3,
            Technique::Identity => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Some(match id {
            0 => Technique::Bins,
            1 => Technique::MulShift,
            2 => Technique::EvenOdd,
            3 => Technique::Evenness,
            4 => Technique::Identity,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Technique::Bins => "bins",
            Technique::MulShift => "mulshift",
            Technique::EvenOdd => "evenodd",
            Technique::Evenness => "evenness",
            Technique::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bins" => Ok(Technique::Bins),
            "mulshift" => Ok(Technique::MulShift),
            "evenodd" => Ok(Technique::EvenOdd),
            "evenness" => Ok(Technique::Evenness),
            "identity" => Ok(Technique::Identity),
            other => Err(format!("unknown technique `{other}`")),
        }
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Technique together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Params {
    Bins { k: usize, d: u32 },
    MulShift { d: u32 },
    EvenOdd { d: u32 },
    Evenness { d: u32 },
}

impl Params {
    pub fn technique(self) -> Technique {
        match self {
            Params::Bins { .. } => Technique::Bins,
            Params::MulShift { .. } => Technique::MulShift,
            Params::EvenOdd { .. } => Technique::EvenOdd,
            Params::Evenness { .. } => Technique::Evenness,
        }
    }

    pub fn d(self) -> u32 {
        match self {
            Params::Bins { d, .. }
            | Params::MulShift { d }
            | Params::EvenOdd { d }
            | Params::Evenness { d } => d,
        }
    }
}

impl std::fmt::Display for Params {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Params::Bins { k, d } => write!(f, "k={k};d={d}"),
            other => write!(f, "d={}", other.d()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformOptions {
    pub max_iterations: u32,
    /// Evaluate the matching lossless predicate before every arithmetic step
    /// and fail with [`TransformError::PredicateViolation`] if it does not hold.
    pub checked: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            max_iterations: 64,
            checked: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformMetadata {
    Identity,
    Bins(CompactBinsMetadata),
    MulShift(MultiplyShiftMetadata),
    EvenOdd(EvenOddSeparateMetadata),
    Evenness(EvennessMetadata),
}

impl TransformMetadata {
    pub fn technique(&self) -> Technique {
        match self {
            TransformMetadata::Identity => Technique::Identity,
            TransformMetadata::Bins(_) => Technique::Bins,
            TransformMetadata::MulShift(_) => Technique::MulShift,
            TransformMetadata::EvenOdd(_) => Technique::EvenOdd,
            TransformMetadata::Evenness(_) => Technique::Evenness,
        }
    }

    pub fn iterations(&self) -> u32 {
        match self {
            TransformMetadata::Identity | TransformMetadata::Bins(_) => 0,
            TransformMetadata::MulShift(m) => m.iterations,
            TransformMetadata::EvenOdd(m) => m.iterations,
            TransformMetadata::Evenness(m) => m.iterations,
        }
    }
}

/// Transformed values plus everything needed to undo the transform.
///
/// `values` holds the transformed nonzero samples only; zeros and original
/// exponents live in `alignment`. For the identity technique `values` is the
/// original dataset and `alignment` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedDataset {
    pub values: Vec<f64>,
    pub alignment: Option<AlignmentRecord>,
    pub metadata: TransformMetadata,
}

impl PreprocessedDataset {
    pub fn technique(&self) -> Technique {
        self.metadata.technique()
    }

    /// Length of the original dataset.
    pub fn original_len(&self) -> usize {
        self.alignment
            .as_ref()
            .map_or(self.values.len(), AlignmentRecord::total_len)
    }
}

pub(crate) enum Prepared {
    Identity(Vec<f64>),
    Aligned {
        values: Vec<f64>,
        record: AlignmentRecord,
    },
}

/// Checks the input domain and aligns exponents.
pub(crate) fn preflight(ds: &[f64]) -> Result<Prepared, TransformError> {
    fp::ensure_round_to_nearest()?;
    let first = ds.first().ok_or(TransformError::EmptyInput)?;
    for (index, &value) in ds.iter().enumerate() {
        let bits = value.to_bits();
        let supported = bits == 0 || (value.is_sign_positive() && fp::is_normal_bits(value));
        if !supported {
            return Err(TransformError::Unsupported { index, value });
        }
    }
    if ds.iter().all(|v| v.to_bits() == first.to_bits()) {
        return Ok(Prepared::Identity(ds.to_vec()));
    }
    let (values, record) = align_exponents(ds)?;
    Ok(Prepared::Aligned { values, record })
}

pub(crate) fn check_d(d: u32) -> Result<(), TransformError> {
    if !(1..=MANTISSA_BITS).contains(&d) {
        return Err(TransformError::InvalidParameter(format!(
            "d = {d} outside [1, {MANTISSA_BITS}]"
        )));
    }
    Ok(())
}

pub(crate) fn package(
    values: Vec<f64>,
    record: AlignmentRecord,
    metadata: TransformMetadata,
) -> PreprocessedDataset {
    PreprocessedDataset {
        values,
        alignment: (!record.is_trivial()).then_some(record),
        metadata,
    }
}

pub(crate) fn identity(values: Vec<f64>) -> PreprocessedDataset {
    PreprocessedDataset {
        values,
        alignment: None,
        metadata: TransformMetadata::Identity,
    }
}

/// Largest `d` below `failed_d` for which `attempt` succeeds, assuming
/// feasibility is monotone in `d`; 0 when none does.
pub(crate) fn max_feasible_d<F>(failed_d: u32, attempt: F) -> u32
where
    F: Fn(u32) -> bool,
{
    let (mut lo, mut hi) = (0u32, failed_d);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if attempt(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn forward(ds: &[f64], params: Params) -> Result<PreprocessedDataset, TransformError> {
    forward_with(ds, params, &TransformOptions::default())
}

pub fn forward_with(
    ds: &[f64],
    params: Params,
    opts: &TransformOptions,
) -> Result<PreprocessedDataset, TransformError> {
    match params {
        Params::Bins { k, d } => bins::forward_with(ds, k, d, opts),
        Params::MulShift { d } => mulshift::forward_with(ds, d, opts),
        Params::EvenOdd { d } => evenodd::forward_with(ds, d, opts),
        Params::Evenness { d } => evenness::forward_with(ds, d, opts),
    }
}

pub fn inverse(pd: &PreprocessedDataset) -> Result<Vec<f64>, TransformError> {
    inverse_with(pd, &TransformOptions::default())
}

pub fn inverse_with(pd: &PreprocessedDataset, opts: &TransformOptions) -> Result<Vec<f64>, TransformError> {
    fp::ensure_round_to_nearest()?;
    let restored = match &pd.metadata {
        TransformMetadata::Identity => {
            if pd.alignment.is_some() {
                return Err(TransformError::Integrity(
                    "identity dataset carries an alignment record".into(),
                ));
            }
            return Ok(pd.values.clone());
        }
        TransformMetadata::Bins(m) => bins::inverse_values(&pd.values, m, opts)?,
        TransformMetadata::MulShift(m) => mulshift::inverse_values(&pd.values, m, opts)?,
        TransformMetadata::EvenOdd(m) => evenodd::inverse_values(&pd.values, m, opts)?,
        TransformMetadata::Evenness(m) => evenness::inverse_values(&pd.values, m, opts)?,
    };
    match &pd.alignment {
        Some(record) => restore_exponents(&restored, record),
        None => Ok(restored),
    }
}

/// Checks that every transformed value shares its `d` leading mantissa bits.
pub fn shares_leading_bits(values: &[f64], d: u32) -> bool {
    match fp::shared_bits(values) {
        Ok(summary) => summary.leading_mantissa_shared() >= d,
        Err(_) => true,
    }
}
