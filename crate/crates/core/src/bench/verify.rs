use std::fmt;

use crate::codec;
use crate::transforms::{self, Params, PreprocessedDataset, TransformOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub stage: &'static str,
    /// First differing element, if the pipeline got far enough to compare.
    pub index: Option<usize>,
    pub expected: Option<u64>,
    pub actual: Option<u64>,
    pub detail: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed", self.stage)?;
        if let Some(i) = self.index {
            write!(f, " at index {i}")?;
        }
        let pat = |b: Option<u64>| b.map_or_else(|| "missing".to_string(), |b| format!("{b:#018x}"));
        if self.expected.is_some() || self.actual.is_some() {
            write!(f, ": expected {}, got {}", pat(self.expected), pat(self.actual))?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Pass,
    /// The forward transform declined the input; nothing to verify.
    Skipped {
        reason: String,
    },
    Fail(Mismatch),
}

impl VerifyOutcome {
    pub fn is_failure(&self) -> bool {
        matches!(self, VerifyOutcome::Fail(_))
    }
}

/// First index where the bit patterns differ, with both patterns.
pub fn first_mismatch(expected: &[f64], actual: &[f64]) -> Option<(usize, Option<u64>, Option<u64>)> {
    let n = expected.len().max(actual.len());
    (0..n).find_map(|i| {
        let e = expected.get(i).map(|v| v.to_bits());
        let a = actual.get(i).map(|v| v.to_bits());
        (e != a).then_some((i, e, a))
    })
}

/// Encodes, optionally corrupts, decodes and inverts `pd`, comparing against `original`.
pub(crate) fn check_roundtrip(
    original: &[f64],
    pd: &PreprocessedDataset,
    opts: &TransformOptions,
    corrupt: impl FnOnce(&mut Vec<u8>),
) -> Result<(), Mismatch> {
    let fail = |stage, detail: String| Mismatch {
        stage,
        index: None,
        expected: None,
        actual: None,
        detail,
    };
    let mut bytes = codec::encode(pd);
    corrupt(&mut bytes);
    let decoded = codec::decode(&bytes).map_err(|e| fail("decode", e.to_string()))?;
    let restored = transforms::inverse_with(&decoded, opts).map_err(|e| fail("inverse", e.to_string()))?;
    match first_mismatch(original, &restored) {
        None => Ok(()),
        Some((index, expected, actual)) => Err(Mismatch {
            stage: "compare",
            index: Some(index),
            expected,
            actual,
            detail: format!("{} original values, {} restored", original.len(), restored.len()),
        }),
    }
}

pub fn verify(ds: &[f64], params: Params, opts: &TransformOptions) -> VerifyOutcome {
    verify_with(ds, params, opts, |_| {})
}

/// Like [`verify`], applying `corrupt` to the encoded container before decoding.
pub fn verify_with(
    ds: &[f64],
    params: Params,
    opts: &TransformOptions,
    corrupt: impl FnOnce(&mut Vec<u8>),
) -> VerifyOutcome {
    let pd = match transforms::forward_with(ds, params, opts) {
        Ok(pd) => pd,
        Err(e) => {
            return VerifyOutcome::Skipped {
                reason: e.to_string(),
            }
        }
    };
    match check_roundtrip(ds, &pd, opts, corrupt) {
        Ok(()) => VerifyOutcome::Pass,
        Err(m) => VerifyOutcome::Fail(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::{generate, Family};

    #[test]
    fn valid_runs_pass() {
        let ds = generate(Family::Gaussian, 200, 1);
        let opts = TransformOptions::default();
        for params in [
            Params::Bins { k: 200, d: 8 },
            Params::MulShift { d: 4 },
            Params::EvenOdd { d: 4 },
            Params::Evenness { d: 8 },
        ] {
            assert_eq!(verify(&ds, params, &opts), VerifyOutcome::Pass, "{params}");
        }
    }

    #[test]
    fn corrupted_value_reports_index_and_patterns() {
        let ds = generate(Family::Uniform, 50, 2);
        let opts = TransformOptions::default();
        // flip a low mantissa bit of value 10: still decodes, inverts to a different value
        let flip = |b: &mut Vec<u8>| {
            let at = b.len() - 8 * (50 - 10);
            b[at] ^= 0x04;
        };
        match verify_with(&ds, Params::Evenness { d: 2 }, &opts, flip) {
            VerifyOutcome::Fail(m) => {
                assert_eq!(m.stage, "compare");
                assert_eq!(m.index, Some(10));
                assert_eq!(m.expected, Some(ds[10].to_bits()));
                assert_ne!(m.actual, m.expected);
                assert!(m.to_string().contains("index 10"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_container_fails_at_decode() {
        let ds = generate(Family::Uniform, 20, 3);
        let out = verify_with(
            &ds,
            Params::MulShift { d: 2 },
            &TransformOptions::default(),
            |b| b.truncate(b.len() - 3),
        );
        assert!(
            matches!(out, VerifyOutcome::Fail(Mismatch { stage: "decode", .. })),
            "{out:?}"
        );
    }

    #[test]
    fn declined_input_is_skipped() {
        let out = verify(
            &[1.0, -2.0],
            Params::Evenness { d: 2 },
            &TransformOptions::default(),
        );
        assert!(matches!(out, VerifyOutcome::Skipped { .. }));
        assert!(!out.is_failure());
    }

    #[test]
    fn mismatch_helper() {
        assert_eq!(first_mismatch(&[1.0, 2.0], &[1.0, 2.0]), None);
        assert_eq!(
            first_mismatch(&[1.0, 2.0], &[1.0]),
            Some((1, Some(2f64.to_bits()), None))
        );
        assert_eq!(first_mismatch(&[0.0], &[-0.0]), Some((0, Some(0), Some(1 << 63))));
    }
}
