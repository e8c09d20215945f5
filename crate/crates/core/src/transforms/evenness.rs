use super::evenodd::{apply_align_shift, check_cross, undo_align_shift};
use super::{
    check_d, identity, max_feasible_d, package, preflight, units_to_f64, window_floor, Prepared,
    PreprocessedDataset, TransformError, TransformMetadata, TransformOptions, REGION_UNITS, TOP_UNIT,
};
use crate::bitpack::Bitmap;
use crate::fp::{self, MAX_REGION, MIN_REGION};

#[derive(Debug, Clone, PartialEq)]
pub struct EvennessMetadata {
    pub region: i32,
    pub a_align: f64,
    pub d: u32,
    pub iterations: u32,
    /// One bitmap per iteration with one bit per sample: the least significant
    /// mantissa bit of samples shifted in that iteration, zero for the others.
    pub evenness_bits: Vec<Bitmap>,
}

/// Shift of every iteration, in ulps of the region it is added in.
const SHIFT: u64 = REGION_UNITS - 2;

fn transform(
    values: &[f64],
    region: i32,
    d: u32,
    opts: &TransformOptions,
) -> Result<(Vec<f64>, EvennessMetadata), TransformError> {
    let floor = window_floor(d);
    let max = values.iter().map(|&v| fp::mantissa_of(v)).max().unwrap_or(0);
    let a_align = units_to_f64(region, (TOP_UNIT - max) & !3);
    let mut out = values.to_vec();
    apply_align_shift(&mut out, region, a_align, opts)?;
    let mut evenness_bits = Vec::new();
    loop {
        let current = region + evenness_bits.len() as i32;
        let pending: Vec<usize> = (0..out.len())
            .filter(|&i| fp::region_of(out[i]) == current && fp::mantissa_of(out[i]) < floor)
            .collect();
        if pending.is_empty() {
            break;
        }
        if current >= MAX_REGION {
            return Err(TransformError::RangeExhausted { region: current + 1 });
        }
        if evenness_bits.len() as u32 >= opts.max_iterations {
            return Err(TransformError::NonConvergence {
                iterations: evenness_bits.len() as u32,
                max_feasible_d: 0,
            });
        }
        let shift = fp::from_region_parts(current, SHIFT);
        let mut bits = Bitmap::zeros(out.len());
        for i in pending {
            let u = fp::mantissa_of(out[i]);
            bits.set(i, u & 1 == 1);
            let cleared = fp::from_region_parts(current, u & !1);
            check_cross(cleared, shift, opts)?;
            out[i] = cleared + shift;
        }
        evenness_bits.push(bits);
    }
    let meta = EvennessMetadata {
        region,
        a_align,
        d,
        iterations: evenness_bits.len() as u32,
        evenness_bits,
    };
    Ok((out, meta))
}

fn transform_reporting(
    values: &[f64],
    region: i32,
    d: u32,
    opts: &TransformOptions,
) -> Result<(Vec<f64>, EvennessMetadata), TransformError> {
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
            let (out, meta) = transform_reporting(&values, record.reference(), d, opts)?;
            Ok(package(out, record, TransformMetadata::Evenness(meta)))
        }
    }
}

pub fn save_evenness_forward(ds: &[f64], d: u32) -> Result<PreprocessedDataset, TransformError> {
    forward_with(ds, d, &TransformOptions::default())
}

pub fn save_evenness_inverse(pd: &PreprocessedDataset) -> Result<Vec<f64>, TransformError> {
    if !matches!(pd.metadata, TransformMetadata::Evenness(_)) {
        return Err(TransformError::Integrity("not a save-evenness dataset".into()));
    }
    super::inverse(pd)
}

pub(crate) fn inverse_values(
    values: &[f64],
    meta: &EvennessMetadata,
    opts: &TransformOptions,
) -> Result<Vec<f64>, TransformError> {
    check_d(meta.d).map_err(|e| TransformError::Integrity(e.to_string()))?;
    if !(MIN_REGION..=MAX_REGION).contains(&meta.region) {
        return Err(TransformError::Integrity(format!("region {}", meta.region)));
    }
    if meta.evenness_bits.len() != meta.iterations as usize {
        return Err(TransformError::Integrity(format!(
            "{} evenness bitmaps for {} iterations",
            meta.evenness_bits.len(),
            meta.iterations
        )));
    }
    if let Some(b) = meta.evenness_bits.iter().find(|b| b.len() != values.len()) {
        return Err(TransformError::Integrity(format!(
            "evenness bitmap of {} bits for {} values",
            b.len(),
            values.len()
        )));
    }
    let floor = window_floor(meta.d);
    let top = meta.region as i64 + i64::from(meta.iterations);
    let mut out = values
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
            let processed = (r - meta.region) as usize;
            if meta.evenness_bits[processed..].iter().any(|b| b.get(index)) {
                return Err(bad("evenness bit set for an iteration that skipped it"));
            }
            let mut x = y;
            for current in (meta.region..r).rev() {
                let shift = fp::from_region_parts(current, SHIFT);
                let t = x - shift;
                let u = fp::mantissa_of(t);
                if fp::region_of(t) != current || u % 2 == 1 {
                    return Err(bad("shift does not restore an even mantissa"));
                }
                check_cross(t, shift, opts)?;
                let bit = u64::from(meta.evenness_bits[(current - meta.region) as usize].get(index));
                if u | bit >= floor {
                    return Err(bad("was already inside the target window"));
                }
                x = fp::from_region_parts(current, u | bit);
            }
            Ok(x)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    undo_align_shift(&mut out, meta.region, meta.a_align)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{inverse, inverse_with, shares_leading_bits};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn random_thousand_values_d10() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ds: Vec<f64> = (0..1000).map(|_| rng.random_range(1.0..2.0)).collect();
        let opts = TransformOptions {
            checked: true,
            ..Default::default()
        };
        let pd = forward_with(&ds, 10, &opts).unwrap();
        let TransformMetadata::Evenness(m) = &pd.metadata else {
            panic!()
        };
        assert!(m.iterations >= 10 && m.iterations <= 13, "{}", m.iterations);
        assert!(m.evenness_bits.iter().all(|b| b.len() == 1000));
        assert!(shares_leading_bits(&pd.values, 10));
        assert_eq!(bits(&inverse_with(&pd, &opts).unwrap()), bits(&ds));
    }

    #[test]
    fn two_values() {
        let ds = [1.0 + f64::EPSILON, 1.5];
        let pd = save_evenness_forward(&ds, 4).unwrap();
        assert_eq!(bits(&save_evenness_inverse(&pd).unwrap()), bits(&ds));
    }

    #[test]
    fn d52_never_converges() {
        let r = save_evenness_forward(&[1.0, 1.5], 52);
        assert!(
            matches!(
                r,
                Err(TransformError::NonConvergence {
                    max_feasible_d: 50,
                    ..
                })
            ),
            "{r:?}"
        );
    }

    #[test]
    fn stray_bit_is_rejected() {
        let ds = [1.0, 1.9375];
        let mut pd = save_evenness_forward(&ds, 3).unwrap();
        let TransformMetadata::Evenness(m) = &mut pd.metadata else {
            panic!()
        };
        let skipped = (0..2).find(|&i| fp::region_of(pd.values[i]) == m.region).unwrap();
        m.evenness_bits[0].set(skipped, true);
        assert!(matches!(inverse(&pd), Err(TransformError::Integrity(_))));
    }

    #[test]
    fn bitmap_count_checked() {
        let mut pd = save_evenness_forward(&[1.0, 1.5], 3).unwrap();
        let TransformMetadata::Evenness(m) = &mut pd.metadata else {
            panic!()
        };
        m.evenness_bits.pop();
        assert!(matches!(inverse(&pd), Err(TransformError::Integrity(_))));
    }
}
