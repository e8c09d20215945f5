use super::{
    check_d, f64_to_units, identity, max_feasible_d, package, preflight, units_to_f64, window_floor,
    Prepared, PreprocessedDataset, TransformError, TransformMetadata, TransformOptions, REGION_UNITS,
    TOP_UNIT,
};
use crate::fp::{self, MAX_REGION, MIN_REGION};

#[derive(Debug, Clone, PartialEq)]
pub struct EvenOddSeparateMetadata {
    /// Exponent region of the aligned input.
    pub region: i32,
    /// Initial within-region shift moving the maximum to the top of the region.
    pub a_align: f64,
    pub d: u32,
    /// `max - min` of the aligned input.
    pub w_0: f64,
    pub iterations: u32,
}

/// Output range of the even-origin and odd-origin values of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationWindows {
    pub region: i32,
    pub even: Option<(f64, f64)>,
    pub odd: Option<(f64, f64)>,
}

impl IterationWindows {
    pub fn disjoint(&self) -> bool {
        match (self.even, self.odd) {
            (Some((even_lo, _)), Some((_, odd_hi))) => odd_hi < even_lo,
            _ => true,
        }
    }
}

/// Nominal window length after one iteration: `2 w - 2^(e - d)`.
pub fn nominal_window_step(w: f64, e: i32, d: u32) -> f64 {
    2.0 * w - fp::pow2(e - d as i32)
}

/// Even-mantissa shift, in ulps of the region it is added in.
const EVEN_SHIFT: u64 = REGION_UNITS - 2;

/// Per-iteration constants, all in ulps of the region being processed.
#[derive(Debug, Clone, Copy)]
struct Step {
    /// Lower bound of the values still below the window.
    lo: u64,
    odd_shift: u64,
}

/// Walks the window schedule derived from `w_0`: `span` bounds the distance
/// between the lowest pending value and the top of the pending range.
struct Schedule {
    below_window: u64,
    half_h: u64,
    span: u64,
}

impl Schedule {
    fn new(w0_units: u64, d: u32) -> Self {
        let floor = window_floor(d);
        Self {
            below_window: floor - 1,
            half_h: (REGION_UNITS - floor) / 2,
            // the aligned maximum may sit up to three ulps under the top
            span: w0_units + 3,
        }
    }

    fn next(&mut self) -> Option<Step> {
        let span = self.span.min(self.below_window);
        let lo = self.below_window - span;
        let limit = EVEN_SHIFT - span;
        // largest odd shift strictly below `limit`
        let odd_shift = if limit % 2 == 0 {
            limit.checked_sub(1)?
        } else {
            limit.checked_sub(2)?
        };
        self.span = (span + 2).saturating_sub(self.half_h);
        Some(Step { lo, odd_shift })
    }
}

fn align_shift_units(values: &[f64]) -> (u64, u64) {
    let max = values.iter().map(|&v| fp::mantissa_of(v)).max().unwrap_or(0);
    let min = values.iter().map(|&v| fp::mantissa_of(v)).min().unwrap_or(0);
    ((TOP_UNIT - max) & !3, max - min)
}

pub(crate) fn apply_align_shift(
    values: &mut [f64],
    region: i32,
    shift: f64,
    opts: &TransformOptions,
) -> Result<(), TransformError> {
    if shift == 0.0 {
        return Ok(());
    }
    if opts.checked && !fp::is_lossless_add_within_region(shift, region).unwrap_or(false) {
        return Err(TransformError::PredicateViolation(format!(
            "alignment shift {shift:e} into region {region}"
        )));
    }
    for v in values {
        *v += shift;
    }
    Ok(())
}

pub(crate) fn undo_align_shift(values: &mut [f64], region: i32, shift: f64) -> Result<(), TransformError> {
    let units = f64_to_units(region, shift)
        .filter(|u| u % 4 == 0)
        .ok_or_else(|| TransformError::Integrity(format!("invalid alignment shift {shift:e}")))?;
    if shift == 0.0 {
        return Ok(());
    }
    for v in values {
        if fp::mantissa_of(*v) < units {
            return Err(TransformError::Integrity(format!(
                "value {v:e} lies below the alignment shift"
            )));
        }
        *v -= shift;
    }
    Ok(())
}

pub(crate) fn check_cross(x: f64, a: f64, opts: &TransformOptions) -> Result<(), TransformError> {
    if opts.checked && !fp::is_lossless_add_cross_region(x, a).unwrap_or(false) {
        return Err(TransformError::PredicateViolation(format!("{x:e} + {a:e}")));
    }
    Ok(())
}

fn transform(
    values: &[f64],
    region: i32,
    d: u32,
    opts: &TransformOptions,
    mut trace: Option<&mut Vec<IterationWindows>>,
) -> Result<(Vec<f64>, EvenOddSeparateMetadata), TransformError> {
    let floor = window_floor(d);
    let (align_units, w0_units) = align_shift_units(values);
    let a_align = units_to_f64(region, align_units);
    let mut out = values.to_vec();
    apply_align_shift(&mut out, region, a_align, opts)?;
    let mut schedule = Schedule::new(w0_units, d);
    let mut iterations = 0u32;
    loop {
        let current = region + iterations as i32;
        let pending: Vec<usize> = (0..out.len())
            .filter(|&i| fp::region_of(out[i]) == current && fp::mantissa_of(out[i]) < floor)
            .collect();
        if pending.is_empty() {
            break;
        }
        if current >= MAX_REGION {
            return Err(TransformError::RangeExhausted { region: current + 1 });
        }
        let step = match schedule.next() {
            Some(step) if iterations < opts.max_iterations => step,
            _ => {
                return Err(TransformError::NonConvergence {
                    iterations,
                    max_feasible_d: 0,
                })
            }
        };
        let even_shift = fp::from_region_parts(current, EVEN_SHIFT);
        let odd_shift = fp::from_region_parts(current, step.odd_shift);
        let mut windows = IterationWindows {
            region: current + 1,
            even: None,
            odd: None,
        };
        for i in pending {
            let x = out[i];
            let u = fp::mantissa_of(x);
            if u < step.lo {
                return Err(TransformError::Integrity(format!(
                    "value {x:e} escaped the window schedule"
                )));
            }
            let (shift, slot) = if u % 2 == 0 {
                (even_shift, &mut windows.even)
            } else {
                (odd_shift, &mut windows.odd)
            };
            check_cross(x, shift, opts)?;
            let y = x + shift;
            *slot = Some(slot.map_or((y, y), |(lo, hi)| (lo.min(y), hi.max(y))));
            out[i] = y;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(windows);
        }
        iterations += 1;
    }
    let meta = EvenOddSeparateMetadata {
        region,
        a_align,
        d,
        w_0: units_to_f64(region, w0_units),
        iterations,
    };
    Ok((out, meta))
}

fn transform_reporting(
    values: &[f64],
    region: i32,
    d: u32,
    opts: &TransformOptions,
) -> Result<(Vec<f64>, EvenOddSeparateMetadata), TransformError> {
    match transform(values, region, d, opts, None) {
        Err(TransformError::NonConvergence { iterations, .. }) => Err(TransformError::NonConvergence {
            iterations,
            max_feasible_d: max_feasible_d(d, |dd| transform(values, region, dd, opts, None).is_ok()),
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
            Ok(package(out, record, TransformMetadata::EvenOdd(meta)))
        }
    }
}

pub fn even_odd_separate_forward(ds: &[f64], d: u32) -> Result<PreprocessedDataset, TransformError> {
    forward_with(ds, d, &TransformOptions::default())
}

pub fn even_odd_separate_inverse(pd: &PreprocessedDataset) -> Result<Vec<f64>, TransformError> {
    if !matches!(pd.metadata, TransformMetadata::EvenOdd(_)) {
        return Err(TransformError::Integrity("not an even/odd dataset".into()));
    }
    super::inverse(pd)
}

/// Runs the forward pass and returns the output windows of every iteration.
pub fn even_odd_trace(ds: &[f64], d: u32) -> Result<Vec<IterationWindows>, TransformError> {
    check_d(d)?;
    let mut trace = Vec::new();
    if let Prepared::Aligned { values, record } = preflight(ds)? {
        transform(
            &values,
            record.reference(),
            d,
            &TransformOptions::default(),
            Some(&mut trace),
        )?;
    }
    Ok(trace)
}

pub(crate) fn inverse_values(
    values: &[f64],
    meta: &EvenOddSeparateMetadata,
    opts: &TransformOptions,
) -> Result<Vec<f64>, TransformError> {
    check_d(meta.d).map_err(|e| TransformError::Integrity(e.to_string()))?;
    if !(MIN_REGION..=MAX_REGION).contains(&meta.region) {
        return Err(TransformError::Integrity(format!("region {}", meta.region)));
    }
    let w0_units = f64_to_units(meta.region, meta.w_0)
        .ok_or_else(|| TransformError::Integrity(format!("invalid window length {:e}", meta.w_0)))?;
    let floor = window_floor(meta.d);
    let mut schedule = Schedule::new(w0_units, meta.d);
    let steps: Vec<Step> = (0..meta.iterations)
        .map(|_| schedule.next())
        .collect::<Option<_>>()
        .ok_or_else(|| TransformError::Integrity("iteration count exceeds the schedule".into()))?;
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
            let mut x = y;
            for current in (meta.region..r).rev() {
                let step = steps[(current - meta.region) as usize];
                let u = fp::mantissa_of(x);
                let even = 2 * u >= step.lo + EVEN_SHIFT;
                let shift_units = if even { EVEN_SHIFT } else { step.odd_shift };
                let shift = fp::from_region_parts(current, shift_units);
                let t = x - shift;
                let tu = fp::mantissa_of(t);
                if fp::region_of(t) != current || (tu % 2 == 0) != even || tu < step.lo || tu >= floor {
                    return Err(bad("falls on no valid sub-window"));
                }
                check_cross(t, shift, opts)?;
                x = t;
            }
            Ok(x)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    undo_align_shift(&mut out, meta.region, meta.a_align)?;
    Ok(out)
}
