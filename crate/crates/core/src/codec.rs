//! The `FPP1` container: a [`PreprocessedDataset`] as bytes.
//!
//! ```text
//! magic "FPP1" | technique u8 | n u64 | metadata block | n x f64
//! ```
//!
//! All integers and floats are little-endian. The low seven bits of the
//! technique byte hold the technique id; bit 7 flags an alignment section at
//! the start of the metadata block. `n` counts the values in the values block.

use thiserror::Error;

use crate::bitpack::{ceil_log2, BitReader, BitWriter, Bitmap};
use crate::fp::{MANTISSA_BITS, MAX_REGION, MIN_REGION};
use crate::transforms::{
    multiply_shift_shift, AlignmentRecord, CompactBinsMetadata, EvenOddSeparateMetadata, EvennessMetadata,
    MultiplyShiftMetadata, PreprocessedDataset, Technique, TransformMetadata,
};

pub const MAGIC: [u8; 4] = *b"FPP1";
pub const HEADER_LEN: usize = 13;
const ALIGNMENT_FLAG: u8 = 0x80;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic(Vec<u8>),
    #[error("truncated input: needed {needed} bytes, found {available}")]
    Truncated { needed: usize, available: usize },
    #[error("length mismatch in {section}: expected {expected} bytes, found {actual}")]
    LengthMismatch {
        section: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("unknown technique id {0}")]
    UnknownTechnique(u8),
    #[error("invalid field: {0}")]
    InvalidField(String),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end =
            self.pos
                .checked_add(n)
                .filter(|&e| e <= self.bytes.len())
                .ok_or(CodecError::Truncated {
                    needed: self.pos.saturating_add(n),
                    available: self.bytes.len(),
                })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.array::<1>()?[0])
    }

    fn i16(&mut self) -> Result<i16, CodecError> {
        Ok(i16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn finish(&self, section: &'static str, expected: usize) -> Result<(), CodecError> {
        if self.remaining() != 0 {
            return Err(CodecError::LengthMismatch {
                section,
                expected,
                actual: self.bytes.len(),
            });
        }
        Ok(())
    }
}

fn invalid(msg: impl Into<String>) -> CodecError {
    CodecError::InvalidField(msg.into())
}

fn region_field(r: i16) -> Result<i32, CodecError> {
    let r = i32::from(r);
    if !(MIN_REGION..=MAX_REGION).contains(&r) {
        return Err(invalid(format!("region {r}")));
    }
    Ok(r)
}

fn d_field(d: u8) -> Result<u32, CodecError> {
    if !(1..=MANTISSA_BITS as u8).contains(&d) {
        return Err(invalid(format!("d = {d}")));
    }
    Ok(u32::from(d))
}

/// Count of distinct bit patterns, which the bins block depends on.
fn unique_count(values: &[f64]) -> usize {
    let mut bits: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
    bits.sort_unstable();
    bits.dedup();
    bits.len()
}

/// Bytes of a compact bins block with `k` bins over `unique` distinct values.
pub fn bins_block_len(k: usize, unique: usize) -> usize {
    (k * 64 + k.saturating_sub(1) * ceil_log2(unique) as usize).div_ceil(8)
}

fn write_alignment(out: &mut Vec<u8>, rec: &AlignmentRecord) {
    out.extend_from_slice(&(rec.total_len() as u64).to_le_bytes());
    out.extend_from_slice(&(rec.reference() as i16).to_le_bytes());
    let base = rec.deltas().iter().copied().min().unwrap_or(0);
    let max = rec.deltas().iter().copied().max().unwrap_or(0);
    let width = ceil_log2((max - base) as usize + 1);
    out.extend_from_slice(&(base as i16).to_le_bytes());
    out.push(width as u8);
    match rec.zeros() {
        Some(z) => {
            out.push(1);
            out.extend_from_slice(z.as_bytes());
        }
        None => out.push(0),
    }
    let mut w = BitWriter::new();
    for &delta in rec.deltas() {
        w.write((delta - base) as u64, width);
    }
    out.extend_from_slice(&w.finish());
}

fn read_alignment(r: &mut Reader<'_>, n: usize) -> Result<AlignmentRecord, CodecError> {
    let total = usize::try_from(r.u64()?).map_err(|_| invalid("alignment length"))?;
    let reference = region_field(r.i16()?)?;
    let base = i32::from(r.i16()?);
    let width = u32::from(r.u8()?);
    if width > 12 {
        return Err(invalid(format!("delta width {width}")));
    }
    let zeros = match r.u8()? {
        0 => None,
        1 => {
            let bytes = r.take(total.div_ceil(8))?;
            Some(Bitmap::from_bytes(bytes, total).ok_or_else(|| invalid("zero bitmap padding"))?)
        }
        other => return Err(invalid(format!("zero flag {other}"))),
    };
    let packed_len = n
        .checked_mul(width as usize)
        .ok_or_else(|| invalid("delta block size"))?
        .div_ceil(8);
    let packed = r.take(packed_len)?;
    let mut bits = BitReader::new(packed);
    let deltas = (0..n)
        .map(|_| base + bits.read(width).expect("length checked") as i32)
        .collect();
    if !bits.rest_is_zero() {
        return Err(invalid("delta padding"));
    }
    AlignmentRecord::new(total, reference, deltas, zeros).map_err(|e| invalid(e.to_string()))
}

fn write_technique(out: &mut Vec<u8>, pd: &PreprocessedDataset) {
    match &pd.metadata {
        TransformMetadata::Identity => {}
        TransformMetadata::Bins(m) => {
            for s in &m.shifts {
                out.extend_from_slice(&s.to_bits().to_le_bytes());
            }
            let b = ceil_log2(unique_count(&pd.values));
            let mut w = BitWriter::new();
            for &bound in &m.boundaries {
                w.write(u64::from(bound), b);
            }
            out.extend_from_slice(&w.finish());
        }
        TransformMetadata::MulShift(m) => {
            out.extend_from_slice(&(m.region as i16).to_le_bytes());
            out.push(m.d as u8);
            out.extend_from_slice(&m.a_1.to_bits().to_le_bytes());
            out.extend_from_slice(&m.iterations.to_le_bytes());
        }
        TransformMetadata::EvenOdd(m) => {
            out.extend_from_slice(&(m.region as i16).to_le_bytes());
            out.push(m.d as u8);
            out.extend_from_slice(&m.a_align.to_bits().to_le_bytes());
            out.extend_from_slice(&m.w_0.to_bits().to_le_bytes());
            out.extend_from_slice(&m.iterations.to_le_bytes());
        }
        TransformMetadata::Evenness(m) => {
            out.extend_from_slice(&(m.region as i16).to_le_bytes());
            out.push(m.d as u8);
            out.extend_from_slice(&m.a_align.to_bits().to_le_bytes());
            out.extend_from_slice(&m.iterations.to_le_bytes());
            for bitmap in &m.evenness_bits {
                out.extend_from_slice(bitmap.as_bytes());
            }
        }
    }
}

fn read_technique(
    technique: Technique,
    block: &[u8],
    values: &[f64],
) -> Result<TransformMetadata, CodecError> {
    let mut r = Reader::new(block);
    let meta = match technique {
        Technique::Identity => TransformMetadata::Identity,
        Technique::Bins => {
            let unique = unique_count(values);
            let k = (1..=unique)
                .take_while(|&k| bins_block_len(k, unique) <= block.len())
                .find(|&k| bins_block_len(k, unique) == block.len())
                .ok_or(CodecError::LengthMismatch {
                    section: "bins",
                    expected: bins_block_len(1, unique),
                    actual: block.len(),
                })?;
            let shifts = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            let b = ceil_log2(unique);
            let mut bits = BitReader::new(r.take(r.remaining())?);
            let boundaries = (1..k)
                .map(|_| bits.read(b).expect("length checked") as u32)
                .collect();
            if !bits.rest_is_zero() {
                return Err(invalid("bin boundary padding"));
            }
            TransformMetadata::Bins(CompactBinsMetadata { shifts, boundaries })
        }
        Technique::MulShift => {
            let region = region_field(r.i16()?)?;
            let d = d_field(r.u8()?)?;
            let a_1 = r.f64()?;
            let iterations = r.u32()?;
            if multiply_shift_shift(region, d).unwrap_or(0.0).to_bits() != a_1.to_bits() {
                return Err(invalid(format!("first shift {a_1:e} inconsistent with d = {d}")));
            }
            TransformMetadata::MulShift(MultiplyShiftMetadata {
                region,
                d,
                a_1,
                iterations,
            })
        }
        Technique::EvenOdd => TransformMetadata::EvenOdd(EvenOddSeparateMetadata {
            region: region_field(r.i16()?)?,
            d: d_field(r.u8()?)?,
            a_align: r.f64()?,
            w_0: r.f64()?,
            iterations: r.u32()?,
        }),
        Technique::Evenness => {
            let region = region_field(r.i16()?)?;
            let d = d_field(r.u8()?)?;
            let a_align = r.f64()?;
            let iterations = r.u32()?;
            let per = values.len().div_ceil(8);
            let expected = (iterations as usize)
                .checked_mul(per)
                .ok_or_else(|| invalid("iteration count"))?;
            if r.remaining() != expected {
                return Err(CodecError::LengthMismatch {
                    section: "evenness bitmaps",
                    expected,
                    actual: r.remaining(),
                });
            }
            let evenness_bits = (0..iterations)
                .map(|_| {
                    Bitmap::from_bytes(r.take(per)?, values.len())
                        .ok_or_else(|| invalid("evenness bitmap padding"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            TransformMetadata::Evenness(EvennessMetadata {
                region,
                a_align,
                d,
                iterations,
                evenness_bits,
            })
        }
    };
    r.finish(technique.name(), block.len() - r.remaining())?;
    Ok(meta)
}

fn metadata_block(pd: &PreprocessedDataset) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(rec) = &pd.alignment {
        write_alignment(&mut out, rec);
    }
    write_technique(&mut out, pd);
    out
}

pub fn encode(pd: &PreprocessedDataset) -> Vec<u8> {
    let meta = metadata_block(pd);
    let mut out = Vec::with_capacity(HEADER_LEN + meta.len() + 8 * pd.values.len());
    out.extend_from_slice(&MAGIC);
    let flag = if pd.alignment.is_some() { ALIGNMENT_FLAG } else { 0 };
    out.push(pd.technique().id() | flag);
    out.extend_from_slice(&(pd.values.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    for v in &pd.values {
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<PreprocessedDataset, CodecError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4).map_err(|_| CodecError::BadMagic(bytes.to_vec()))?;
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic.to_vec()));
    }
    let tag = r.u8()?;
    let technique = Technique::from_id(tag & !ALIGNMENT_FLAG).ok_or(CodecError::UnknownTechnique(tag))?;
    let n = usize::try_from(r.u64()?).map_err(|_| invalid("value count"))?;
    let values_len = n.checked_mul(8).ok_or_else(|| invalid("value count"))?;
    let needed = HEADER_LEN
        .checked_add(values_len)
        .ok_or_else(|| invalid("value count"))?;
    if bytes.len() < needed {
        return Err(CodecError::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    let meta_end = bytes.len() - values_len;
    let values: Vec<f64> = bytes[meta_end..]
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("chunk of 8"))))
        .collect();
    let mut meta = Reader::new(&bytes[HEADER_LEN..meta_end]);
    let alignment = if tag & ALIGNMENT_FLAG != 0 {
        if technique == Technique::Identity {
            return Err(invalid("identity container with alignment section"));
        }
        Some(read_alignment(&mut meta, n)?)
    } else {
        None
    };
    let block = meta.take(meta.remaining())?;
    let metadata = read_technique(technique, block, &values)?;
    Ok(PreprocessedDataset {
        values,
        alignment,
        metadata,
    })
}

/// Bytes of the metadata block: alignment section plus technique metadata.
pub fn metadata_size_bytes(pd: &PreprocessedDataset) -> usize {
    metadata_block(pd).len()
}
