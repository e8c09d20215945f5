//! Single-base generalized deduplication over 64-bit patterns.
//!
//! Bits shared by every value are stored once; each value contributes only
//! its remaining bits. Archive layout, little-endian:
//!
//! ```text
//! magic "FPGD" | version u8 | shared mask u64 | shared value u64 | n u64 |
//! deviation width u8 | packed deviations | [stage id u8]
//! ```
//!
//! Bit 7 of the version byte marks a trailing stage id, in which case the
//! deviation bytes are the output of that [`ByteStage`].

use thiserror::Error;

use crate::bitpack::{BitReader, BitWriter};
use crate::fp::{shared_bits, FpError};

pub const GD_MAGIC: [u8; 4] = *b"FPGD";
pub const GD_VERSION: u8 = 1;
pub const GD_HEADER_LEN: usize = 30;
const STAGE_FLAG: u8 = 0x80;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GdError {
    #[error("empty input")]
    EmptyInput,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported archive version {0}")]
    Version(u8),
    #[error("truncated archive: needed {needed} bytes, found {available}")]
    Truncated { needed: usize, available: usize },
    #[error("length mismatch: expected {expected} deviation bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("archive uses byte stage {found}, expected {expected:?}")]
    StageMismatch { found: u8, expected: Option<u8> },
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Optional second pass over the packed deviation bytes.
pub trait ByteStage {
    fn id(&self) -> u8;

    fn compress(&self, bytes: &[u8]) -> Vec<u8> {
        bytes.to_vec()
    }

    fn decompress(&self, bytes: &[u8]) -> Result<Vec<u8>, GdError> {
        Ok(bytes.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdArchive {
    pub shared_mask: u64,
    pub shared_value: u64,
    pub n: u64,
    pub deviation_width: u8,
    pub deviations: Vec<u8>,
    pub stage: Option<u8>,
}

impl GdArchive {
    pub fn encoded_len(&self) -> usize {
        GD_HEADER_LEN + self.deviations.len() + usize::from(self.stage.is_some())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&GD_MAGIC);
        out.push(GD_VERSION | if self.stage.is_some() { STAGE_FLAG } else { 0 });
        out.extend_from_slice(&self.shared_mask.to_le_bytes());
        out.extend_from_slice(&self.shared_value.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.push(self.deviation_width);
        out.extend_from_slice(&self.deviations);
        if let Some(id) = self.stage {
            out.push(id);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GdError> {
        if bytes.len() < 4 || bytes[..4] != GD_MAGIC {
            return Err(GdError::BadMagic);
        }
        if bytes.len() < GD_HEADER_LEN {
            return Err(GdError::Truncated {
                needed: GD_HEADER_LEN,
                available: bytes.len(),
            });
        }
        let version = bytes[4];
        if version & !STAGE_FLAG != GD_VERSION {
            return Err(GdError::Version(version));
        }
        let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        let shared_mask = word(5);
        let shared_value = word(13);
        let n = word(21);
        let deviation_width = bytes[29];
        if u32::from(deviation_width) != (!shared_mask).count_ones() {
            return Err(GdError::Integrity(format!(
                "deviation width {deviation_width} does not match the shared mask"
            )));
        }
        if shared_value & !shared_mask != 0 {
            return Err(GdError::Integrity(
                "shared value has bits outside the mask".into(),
            ));
        }
        let mut body = &bytes[GD_HEADER_LEN..];
        let stage = if version & STAGE_FLAG != 0 {
            let (&id, rest) = body.split_last().ok_or(GdError::Truncated {
                needed: GD_HEADER_LEN + 1,
                available: bytes.len(),
            })?;
            body = rest;
            Some(id)
        } else {
            let expected = packed_len(n, deviation_width)?;
            if body.len() < expected {
                return Err(GdError::Truncated {
                    needed: GD_HEADER_LEN + expected,
                    available: bytes.len(),
                });
            }
            if body.len() > expected {
                return Err(GdError::LengthMismatch {
                    expected,
                    actual: body.len(),
                });
            }
            None
        };
        Ok(Self {
            shared_mask,
            shared_value,
            n,
            deviation_width,
            deviations: body.to_vec(),
            stage,
        })
    }
}

fn packed_len(n: u64, width: u8) -> Result<usize, GdError> {
    n.checked_mul(u64::from(width))
        .and_then(|bits| usize::try_from(bits.div_ceil(8)).ok())
        .ok_or_else(|| GdError::Integrity(format!("{n} values of {width} bits")))
}

/// Bits of `v` at the clear positions of `mask`, most significant first.
fn extract(v: u64, mask: u64) -> u64 {
    let mut out = 0u64;
    for i in (0..64).rev() {
        if mask >> i & 1 == 0 {
            out = out << 1 | (v >> i & 1);
        }
    }
    out
}

fn deposit(dev: u64, mask: u64, width: u32) -> u64 {
    let mut out = 0u64;
    let mut k = width;
    for i in (0..64).rev() {
        if mask >> i & 1 == 0 {
            k -= 1;
            out |= (dev >> k & 1) << i;
        }
    }
    out
}

pub fn gd_compress(values: &[f64]) -> Result<GdArchive, GdError> {
    let summary = shared_bits(values).map_err(|e| match e {
        FpError::EmptyInput => GdError::EmptyInput,
        other => GdError::Contract(other.to_string()),
    })?;
    let mask = summary.shared_mask;
    let width = 64 - summary.s_tot;
    let mut w = BitWriter::new();
    if width > 0 {
        for v in values {
            w.write(extract(v.to_bits(), mask), width);
        }
    }
    Ok(GdArchive {
        shared_mask: mask,
        shared_value: summary.shared_value,
        n: values.len() as u64,
        deviation_width: width as u8,
        deviations: w.finish(),
        stage: None,
    })
}

pub fn gd_compress_with(values: &[f64], stage: &dyn ByteStage) -> Result<GdArchive, GdError> {
    let mut archive = gd_compress(values)?;
    archive.deviations = stage.compress(&archive.deviations);
    archive.stage = Some(stage.id());
    Ok(archive)
}

pub fn gd_decompress(archive: &GdArchive) -> Result<Vec<f64>, GdError> {
    if let Some(found) = archive.stage {
        return Err(GdError::StageMismatch {
            found,
            expected: None,
        });
    }
    unpack(archive, &archive.deviations)
}

pub fn gd_decompress_with(archive: &GdArchive, stage: &dyn ByteStage) -> Result<Vec<f64>, GdError> {
    match archive.stage {
        Some(found) if found == stage.id() => unpack(archive, &stage.decompress(&archive.deviations)?),
        found => Err(GdError::StageMismatch {
            found: found.unwrap_or(0),
            expected: Some(stage.id()),
        }),
    }
}

fn unpack(archive: &GdArchive, deviations: &[u8]) -> Result<Vec<f64>, GdError> {
    let width = u32::from(archive.deviation_width);
    if width != (!archive.shared_mask).count_ones() {
        return Err(GdError::Integrity(
            "deviation width does not match the mask".into(),
        ));
    }
    let expected = packed_len(archive.n, archive.deviation_width)?;
    if deviations.len() != expected {
        return Err(GdError::LengthMismatch {
            expected,
            actual: deviations.len(),
        });
    }
    let mut r = BitReader::new(deviations);
    let base = archive.shared_value & archive.shared_mask;
    let out = (0..archive.n)
        .map(|_| {
            let dev = r.read(width).expect("length checked");
            f64::from_bits(base | deposit(dev, archive.shared_mask, width))
        })
        .collect();
    if !r.rest_is_zero() {
        return Err(GdError::Integrity("nonzero padding after deviations".into()));
    }
    Ok(out)
}

/// `(compressed + metadata) / original`, all in bits.
pub fn compression_ratio(
    compressed_bits: u64,
    metadata_bits: u64,
    original_bits: u64,
) -> Result<f64, GdError> {
    if original_bits == 0 {
        return Err(GdError::Contract("original size is zero".into()));
    }
    Ok((compressed_bits + metadata_bits) as f64 / original_bits as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_dataset_has_no_deviations() {
        for n in [1usize, 10, 1000] {
            let a = gd_compress(&vec![7.25; n]).unwrap();
            assert_eq!(a.deviation_width, 0);
            assert!(a.deviations.is_empty());
            assert_eq!(a.to_bytes().len(), GD_HEADER_LEN);
            assert_eq!(gd_decompress(&a).unwrap(), vec![7.25; n]);
        }
    }

    #[test]
    fn one_differing_bit() {
        let a = gd_compress(&[1.0, 1.5]).unwrap();
        assert_eq!(a.deviation_width, 1);
        assert_eq!(a.deviations, vec![0b0100_0000]);
        assert_eq!(gd_decompress(&a).unwrap(), vec![1.0, 1.5]);
    }

    #[test]
    fn ratio() {
        assert_eq!(compression_ratio(6400, 0, 64000).unwrap(), 0.1);
        assert!(compression_ratio(1, 1, 0).is_err());
        let a = gd_compress(&[3.0; 1000]).unwrap();
        let cr = compression_ratio(8 * a.encoded_len() as u64, 0, 64000).unwrap();
        assert!(cr < 0.01);
    }

    #[test]
    fn byte_errors() {
        let bytes = gd_compress(&[1.0, 2.0, 3.0]).unwrap().to_bytes();
        assert_eq!(GdArchive::from_bytes(b"XXXX"), Err(GdError::BadMagic));
        assert!(matches!(
            GdArchive::from_bytes(&bytes[..20]),
            Err(GdError::Truncated { .. })
        ));
        assert!(matches!(
            GdArchive::from_bytes(&bytes[..bytes.len() - 1]),
            Err(GdError::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            GdArchive::from_bytes(&long),
            Err(GdError::LengthMismatch { .. })
        ));
        let mut bad = bytes.clone();
        bad[29] += 1;
        assert!(matches!(GdArchive::from_bytes(&bad), Err(GdError::Integrity(_))));
        let mut ver = bytes;
        ver[4] = 7;
        assert_eq!(GdArchive::from_bytes(&ver), Err(GdError::Version(7)));
        assert_eq!(gd_compress(&[]), Err(GdError::EmptyInput));
    }

    struct Invert;

    impl ByteStage for Invert {
        fn id(&self) -> u8 {
            42
        }
        fn compress(&self, bytes: &[u8]) -> Vec<u8> {
            bytes.iter().map(|b| !b).collect()
        }
        fn decompress(&self, bytes: &[u8]) -> Result<Vec<u8>, GdError> {
            Ok(self.compress(bytes))
        }
    }

    struct Passthrough;

    impl ByteStage for Passthrough {
        fn id(&self) -> u8 {
            1
        }
    }

    #[test]
    fn pluggable_stage() {
        let values = [1.0, 1.25, 9.5, 1e-300];
        let a = gd_compress_with(&values, &Invert).unwrap();
        let parsed = GdArchive::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(parsed.stage, Some(42));
        assert_eq!(gd_decompress_with(&parsed, &Invert).unwrap(), values);
        assert!(matches!(
            gd_decompress(&parsed),
            Err(GdError::StageMismatch { .. })
        ));
        assert!(gd_decompress_with(&parsed, &Passthrough).is_err());
        let p = gd_compress_with(&values, &Passthrough).unwrap();
        assert_eq!(gd_decompress_with(&p, &Passthrough).unwrap(), values);
    }

    proptest! {
        #[test]
        fn roundtrip_any_patterns(bits in prop::collection::vec(any::<u64>(), 1..200)) {
            let values: Vec<f64> = bits.iter().map(|&b| f64::from_bits(b)).collect();
            let a = gd_compress(&values).unwrap();
            let parsed = GdArchive::from_bytes(&a.to_bytes()).unwrap();
            let back = gd_decompress(&parsed).unwrap();
            prop_assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), bits);
            let s = shared_bits(&values).unwrap();
            prop_assert_eq!(
                a.encoded_len(),
                GD_HEADER_LEN + (values.len() * (64 - s.s_tot as usize)).div_ceil(8)
            );
        }
    }
}
