//! Bit-level primitives for IEEE-754 binary64 values.
//!
//! Everything here works on the raw bit pattern: field decomposition, the unit
//! in the last place, exponent regions, shared-bit scans and the predicates
//! that tell whether a floating point addition or multiplication can be undone
//! exactly. The predicates are *sufficient* conditions: `false` means "no
//! guarantee", not "this operation loses information".

use std::hint::black_box;
use std::sync::OnceLock;

use thiserror::Error;

/// Exponent bias of binary64.
pub const EXPONENT_BIAS: i32 = 1023;
/// Number of explicitly stored mantissa bits.
pub const MANTISSA_BITS: u32 = 52;
/// Number of exponent bits.
pub const EXPONENT_BITS: u32 = 11;
/// Smallest unbiased exponent of a normal value.
pub const MIN_REGION: i32 = -1022;
/// Largest unbiased exponent of a finite value.
pub const MAX_REGION: i32 = 1023;

pub const SIGN_MASK: u64 = 1 << 63;
pub const EXPONENT_MASK: u64 = 0x7ff << MANTISSA_BITS;
pub const MANTISSA_MASK: u64 = (1 << MANTISSA_BITS) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FpError {
    #[error("invalid {field} field: {value}")]
    InvalidField { field: &'static str, value: u64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty input")]
    EmptyInput,
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("floating point environment is not round-to-nearest-ties-to-even")]
    RoundingMode,
}

/// Sign, biased exponent and mantissa of one binary64 value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpBits {
    pub sign: bool,
    pub biased_exponent: u16,
    /// The 52 stored mantissa bits; bit 51 is the most significant one.
    pub mantissa: u64,
}

pub fn decompose(x: f64) -> FpBits {
    let bits = x.to_bits();
    FpBits {
        sign: bits & SIGN_MASK != 0,
        biased_exponent: ((bits & EXPONENT_MASK) >> MANTISSA_BITS) as u16,
        mantissa: bits & MANTISSA_MASK,
    }
}

pub fn compose(b: FpBits) -> Result<f64, FpError> {
    if b.biased_exponent > 0x7ff {
        return Err(FpError::InvalidField {
            field: "biased_exponent",
            value: u64::from(b.biased_exponent),
        });
    }
    if b.mantissa > MANTISSA_MASK {
        return Err(FpError::InvalidField {
            field: "mantissa",
            value: b.mantissa,
        });
    }
    let sign = if b.sign { SIGN_MASK } else { 0 };
    Ok(f64::from_bits(
        sign | (u64::from(b.biased_exponent) << MANTISSA_BITS) | b.mantissa,
    ))
}

/// Exact `2^e` for every `e` in `[-1074, 1023]`.
pub fn pow2(e: i32) -> f64 {
    assert!((-1074..=1023).contains(&e), "2^{e} is not representable");
    if e >= MIN_REGION {
        f64::from_bits(((e + EXPONENT_BIAS) as u64) << MANTISSA_BITS)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

/// The value `2^region * (1 + mantissa * 2^-52)` built directly from its fields.
pub(crate) fn from_region_parts(region: i32, mantissa: u64) -> f64 {
    debug_assert!((MIN_REGION..=MAX_REGION).contains(&region));
    debug_assert!(mantissa <= MANTISSA_MASK);
    f64::from_bits((((region + EXPONENT_BIAS) as u64) << MANTISSA_BITS) | mantissa)
}

pub(crate) fn mantissa_of(x: f64) -> u64 {
    x.to_bits() & MANTISSA_MASK
}

/// Unbiased exponent read straight from the exponent field.
pub(crate) fn region_of(x: f64) -> i32 {
    ((x.to_bits() & EXPONENT_MASK) >> MANTISSA_BITS) as i32 - EXPONENT_BIAS
}

pub(crate) fn is_normal_bits(x: f64) -> bool {
    let e = x.to_bits() & EXPONENT_MASK;
    e != 0 && e != EXPONENT_MASK
}

/// Unit in the last place: `2^(E - 1023 - 52)` with `E` the biased exponent of `x`.
pub fn ulp(x: f64) -> Result<f64, FpError> {
    if !x.is_finite() {
        return Err(FpError::Domain(format!("ulp of non-finite value {x}")));
    }
    if !is_normal_bits(x) {
        return Err(FpError::Domain(format!("ulp of zero or subnormal value {x:e}")));
    }
    Ok(pow2(region_of(x) - MANTISSA_BITS as i32))
}

/// The binade `[2^e_star, 2^(e_star + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentRegion {
    pub e_star: i32,
}

impl ExponentRegion {
    pub fn new(e_star: i32) -> Result<Self, FpError> {
        if !(MIN_REGION..=MAX_REGION).contains(&e_star) {
            return Err(FpError::Contract(format!(
                "exponent region {e_star} outside [{MIN_REGION}, {MAX_REGION}]"
            )));
        }
        Ok(Self { e_star })
    }

    pub fn lower(self) -> f64 {
        pow2(self.e_star)
    }

    /// Exclusive upper bound; infinite for the top region.
    pub fn upper(self) -> f64 {
        if self.e_star == MAX_REGION {
            f64::INFINITY
        } else {
            pow2(self.e_star + 1)
        }
    }

    pub fn ulp(self) -> f64 {
        pow2(self.e_star - MANTISSA_BITS as i32)
    }

    pub fn contains(self, x: f64) -> bool {
        x > 0.0 && is_normal_bits(x) && region_of(x) == self.e_star
    }
}

pub fn exponent_region(x: f64) -> Result<ExponentRegion, FpError> {
    if x.is_nan() || x <= 0.0 || !is_normal_bits(x) {
        return Err(FpError::Domain(format!(
            "exponent region needs a positive normal value, got {x:e}"
        )));
    }
    Ok(ExponentRegion { e_star: region_of(x) })
}

/// Bit positions on which every value of a dataset agrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SharedBitsSummary {
    pub s_sign: u32,
    pub s_e: u32,
    pub s_m: u32,
    pub s_tot: u32,
    pub shared_mask: u64,
    pub shared_value: u64,
}

impl SharedBitsSummary {
    /// Length of the run of shared bits starting at the most significant
    /// mantissa bit.
    pub fn leading_mantissa_shared(&self) -> u32 {
        let m = (self.shared_mask & MANTISSA_MASK) << (64 - MANTISSA_BITS);
        (!m).leading_zeros().min(MANTISSA_BITS)
    }
}

pub fn shared_bits(values: &[f64]) -> Result<SharedBitsSummary, FpError> {
    let (first, rest) = values.split_first().ok_or(FpError::EmptyInput)?;
    let mut all_ones = first.to_bits();
    let mut any_ones = all_ones;
    for v in rest {
        let b = v.to_bits();
        all_ones &= b;
        any_ones |= b;
    }
    let shared_mask = all_ones | !any_ones;
    let s_sign = (shared_mask & SIGN_MASK).count_ones();
    let s_e = (shared_mask & EXPONENT_MASK).count_ones();
    let s_m = (shared_mask & MANTISSA_MASK).count_ones();
    Ok(SharedBitsSummary {
        s_sign,
        s_e,
        s_m,
        s_tot: s_sign + s_e + s_m,
        shared_mask,
        shared_value: all_ones,
    })
}

/// Within-region shift condition for a mantissa of `width` bits: the shift
/// operand, sitting `gap` binades below the region, must have its
/// `gap + 2` least significant mantissa bits cleared. When that index set
/// reaches the implicit leading one the condition cannot hold.
pub fn within_region_shift_ok(mantissa: u64, gap: u32, width: u32) -> bool {
    let cleared = gap + 2;
    if gap == 0 || cleared > width {
        return false;
    }
    mantissa & ((1u64 << cleared) - 1) == 0
}

/// Number of low mantissa bits that have to be zero for a shift `gap`
/// binades below the target region, or `None` when no such shift exists.
pub(crate) fn within_region_cleared_bits(gap: u32) -> Option<u32> {
    let cleared = gap + 2;
    (gap > 0 && cleared <= MANTISSA_BITS).then_some(cleared)
}

/// Addition of two values from the same region whose sum lands one region
/// higher: exact iff both addends have the same least significant mantissa bit.
pub fn is_lossless_add_cross_region(x: f64, a: f64) -> Result<bool, FpError> {
    let rx = exponent_region(x).map_err(|e| FpError::Contract(e.to_string()))?;
    let ra = exponent_region(a).map_err(|e| FpError::Contract(e.to_string()))?;
    if rx != ra {
        return Err(FpError::Contract(format!(
            "operands in different regions ({} and {})",
            rx.e_star, ra.e_star
        )));
    }
    if rx.e_star == MAX_REGION {
        return Err(FpError::Contract(
            "sum would overflow past the largest region".into(),
        ));
    }
    Ok(mantissa_of(x) & 1 == mantissa_of(a) & 1)
}

/// Addition of a small shift `a` to a value that stays inside region `e_star`.
pub fn is_lossless_add_within_region(a: f64, e_star: i32) -> Result<bool, FpError> {
    let target = ExponentRegion::new(e_star)?;
    let ra = exponent_region(a).map_err(|e| FpError::Contract(e.to_string()))?;
    if ra.e_star >= target.e_star {
        return Err(FpError::Contract(format!(
            "shift region {} is not below region {}",
            ra.e_star, target.e_star
        )));
    }
    let gap = (target.e_star - ra.e_star) as u32;
    Ok(within_region_shift_ok(mantissa_of(a), gap, MANTISSA_BITS))
}

/// Multiplication that moves a value exactly one region up is undone by the
/// matching division whenever the factor is at least two.
pub fn is_lossless_mul_factor(m: f64) -> bool {
    m.is_finite() && m >= 2.0
}

/// `[2^e, 2^e + 2^(e - d)]`: every value inside has its `d` leading mantissa
/// bits equal to zero.
pub fn target_region(e: i32, d: u32) -> Result<(f64, f64), FpError> {
    ExponentRegion::new(e)?;
    if !(1..=MANTISSA_BITS).contains(&d) {
        return Err(FpError::Contract(format!("d = {d} outside [1, 52]")));
    }
    let low = pow2(e);
    Ok((low, low + pow2(e - d as i32)))
}

fn probe_round_to_nearest() -> bool {
    let one = black_box(1.0f64);
    let half_ulp = black_box(pow2(-53));
    let quarter_ulp = black_box(pow2(-54));
    // Ties go to the even neighbour, anything below a tie goes to the nearest.
    one + half_ulp == 1.0
        && one + 3.0 * half_ulp == 1.0 + pow2(-51)
        && one + quarter_ulp == 1.0
        && -one - half_ulp == -1.0
        && -one - 3.0 * half_ulp == -1.0 - pow2(-51)
        && one - quarter_ulp == 1.0
}

/// Fails unless the floating point unit rounds to nearest, ties to even.
/// The probe runs once per process.
pub fn ensure_round_to_nearest() -> Result<(), FpError> {
    static MODE_OK: OnceLock<bool> = OnceLock::new();
    if *MODE_OK.get_or_init(probe_round_to_nearest) {
        Ok(())
    } else {
        Err(FpError::RoundingMode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decompose_examples() {
        assert_eq!(
            decompose(1.0),
            FpBits {
                sign: false,
                biased_exponent: 1023,
                mantissa: 0
            }
        );
        assert_eq!(
            decompose(-0.0),
            FpBits {
                sign: true,
                biased_exponent: 0,
                mantissa: 0
            }
        );
        // 3.5 = 0x400C_0000_0000_0000
        let bits = 3.5f64.to_bits();
        assert_eq!(bits, 0x400C_0000_0000_0000);
        assert_eq!(
            decompose(3.5),
            FpBits {
                sign: false,
                biased_exponent: (bits >> 52) as u16,
                mantissa: bits & MANTISSA_MASK
            }
        );
        assert_eq!(decompose(3.5).biased_exponent, 1024);
        assert_eq!(decompose(3.5).mantissa, 3 << 50);
    }

    #[test]
    fn compose_examples_and_errors() {
        let one = FpBits {
            sign: false,
            biased_exponent: 1023,
            mantissa: 0,
        };
        assert_eq!(compose(one).unwrap(), 1.0);
        let nz = compose(FpBits {
            sign: true,
            biased_exponent: 0,
            mantissa: 0,
        })
        .unwrap();
        assert_eq!(nz.to_bits(), (-0.0f64).to_bits());
        assert!(matches!(
            compose(FpBits {
                sign: false,
                biased_exponent: 2048,
                mantissa: 0
            }),
            Err(FpError::InvalidField {
                field: "biased_exponent",
                ..
            })
        ));
        assert!(matches!(
            compose(FpBits {
                sign: false,
                biased_exponent: 1,
                mantissa: 1 << 52
            }),
            Err(FpError::InvalidField {
                field: "mantissa",
                ..
            })
        ));
    }

    #[test]
    fn compose_decompose_random_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..1_000_000 {
            let bits: u64 = rng.random();
            let back = compose(decompose(f64::from_bits(bits))).unwrap();
            assert_eq!(back.to_bits(), bits);
        }
        for bits in [
            0u64,
            SIGN_MASK,
            EXPONENT_MASK,
            EXPONENT_MASK | SIGN_MASK,
            EXPONENT_MASK | 1,
            EXPONENT_MASK | 0x8_0000_0000_0001,
            1,
            MANTISSA_MASK,
            f64::MIN_POSITIVE.to_bits(),
            f64::MAX.to_bits(),
        ] {
            assert_eq!(compose(decompose(f64::from_bits(bits))).unwrap().to_bits(), bits);
        }
    }

    #[test]
    fn value_semantics_of_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(1e-300..1e300);
            let b = decompose(x);
            let rebuilt = pow2(i32::from(b.biased_exponent) - 1023) * (1.0 + b.mantissa as f64 * pow2(-52));
            assert_eq!(rebuilt, x);
        }
    }

    #[test]
    fn ulp_examples() {
        assert_eq!(ulp(1.0).unwrap(), pow2(-52));
        assert_eq!(ulp(3.5).unwrap(), pow2(-51));
        assert_eq!(decompose(1e16).biased_exponent, 1076);
        assert_eq!(ulp(1e16).unwrap(), 2.0);
        assert!(ulp(f64::NAN).is_err());
        assert!(ulp(f64::INFINITY).is_err());
        assert!(ulp(0.0).is_err());
        assert!(ulp(f64::MIN_POSITIVE / 2.0).is_err());
    }

    #[test]
    fn ulp_matches_next_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let x: f64 = rng.random_range(1e-200..1e200);
            let next = f64::from_bits(x.to_bits() + 1);
            assert_eq!(ulp(x).unwrap(), next - x);
        }
        // Region boundaries use the value's own exponent.
        assert_eq!(ulp(2.0).unwrap(), pow2(-51));
        let below_two = f64::from_bits(2.0f64.to_bits() - 1);
        assert_eq!(ulp(below_two).unwrap(), pow2(-52));
    }

    #[test]
    fn exponent_region_examples() {
        assert_eq!(exponent_region(1.0).unwrap().e_star, 0);
        assert_eq!(exponent_region(3.5).unwrap().e_star, 1);
        assert_eq!(exponent_region(f64::MIN_POSITIVE).unwrap().e_star, -1022);
        assert!(exponent_region(0.0).is_err());
        assert!(exponent_region(-1.0).is_err());
        assert!(exponent_region(f64::MIN_POSITIVE / 4.0).is_err());
        let r = exponent_region(5.0).unwrap();
        assert!(r.contains(4.0) && r.contains(7.999) && !r.contains(8.0));
    }

    fn per_position_shared(values: &[f64]) -> (u32, u32, u32) {
        let mut counts = [0u32; 3];
        for pos in 0..64 {
            let first = values[0].to_bits() >> pos & 1;
            if values.iter().all(|v| v.to_bits() >> pos & 1 == first) {
                let field = match pos {
                    63 => 0,
                    52..=62 => 1,
                    _ => 2,
                };
                counts[field] += 1;
            }
        }
        (counts[0], counts[1], counts[2])
    }

    #[test]
    fn shared_bits_examples() {
        let s = shared_bits(&[7.25, 7.25, 7.25]).unwrap();
        assert_eq!(s.s_tot, 64);
        assert_eq!(s.shared_value, 7.25f64.to_bits());

        let s = shared_bits(&[1.0, 1.5]).unwrap();
        assert_eq!((s.s_sign, s.s_e, s.s_m, s.s_tot), (1, 11, 51, 63));
        assert_eq!(s.leading_mantissa_shared(), 0);

        assert_eq!(shared_bits(&[]), Err(FpError::EmptyInput));

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let values: Vec<f64> = (0..1000).map(|_| rng.random_range(1.0..2.0)).collect();
        let s = shared_bits(&values).unwrap();
        let (sign, e, m) = per_position_shared(&values);
        assert_eq!(s.s_e, 11);
        assert_eq!((s.s_sign, s.s_e, s.s_m), (sign, e, m));
        assert_eq!(s.shared_mask.count_ones(), s.s_tot);
    }

    #[test]
    fn leading_mantissa_prefix() {
        let s = shared_bits(&[1.75, 1.875]).unwrap();
        assert_eq!(s.leading_mantissa_shared(), 2);
        let s = shared_bits(&[1.5]).unwrap();
        assert_eq!(s.leading_mantissa_shared(), 52);
    }

    fn with_tail(base: f64, tail: u64) -> f64 {
        f64::from_bits(base.to_bits() & !3 | tail)
    }

    #[test]
    fn cross_region_table_entries() {
        let x = with_tail(1.3, 0b00);
        let a = with_tail(1.7, 0b00);
        assert!(is_lossless_add_cross_region(x, a).unwrap());
        assert_eq!(mantissa_of(x + a) & 1, 0);
        assert_eq!((x + a) - a, x);

        let x = with_tail(1.3, 0b01);
        assert!(!is_lossless_add_cross_region(x, a).unwrap());

        let x = with_tail(1.3, 0b10);
        let a = with_tail(1.7, 0b10);
        assert!(is_lossless_add_cross_region(x, a).unwrap());
        assert_eq!(mantissa_of(x + a) & 1, 0);

        assert!(is_lossless_add_cross_region(1.5, 3.0).is_err());
        assert!(is_lossless_add_cross_region(f64::MAX, f64::MAX).is_err());
    }

    #[test]
    fn cross_region_soundness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut false_losses = 0;
        for _ in 0..1_000_000 {
            let x: f64 = rng.random_range(1.0..2.0);
            let a: f64 = rng.random_range(1.0..2.0);
            let ok = is_lossless_add_cross_region(x, a).unwrap();
            let back = (x + a) - a;
            if ok {
                assert_eq!(back.to_bits(), x.to_bits(), "x={x:e} a={a:e}");
            } else if back != x {
                false_losses += 1;
            }
        }
        assert!(false_losses > 0);
    }

    #[test]
    fn within_region_examples() {
        assert!(is_lossless_add_within_region(0.125, 1).unwrap());
        let a = 0.125 * (1.0 + pow2(-52));
        assert!(!is_lossless_add_within_region(a, 1).unwrap());
        assert!(is_lossless_add_within_region(2.0, 1).is_err());
        assert!(is_lossless_add_within_region(0.0, 1).is_err());
        // The index set includes the implicit leading one beyond a gap of 50.
        assert!(is_lossless_add_within_region(pow2(-50), 0).unwrap());
        assert!(!is_lossless_add_within_region(pow2(-51), 0).unwrap());
    }

    #[test]
    fn within_region_soundness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut checked = 0;
        for _ in 0..200_000 {
            let gap = rng.random_range(1..=50u32);
            let cleared = gap + 2;
            let m: u64 = rng.random::<u64>() & MANTISSA_MASK & !((1 << cleared) - 1);
            let a = from_region_parts(-(gap as i32), m);
            assert!(is_lossless_add_within_region(a, 0).unwrap());
            let x: f64 = rng.random_range(1.0..2.0);
            let y = x + a;
            if y < 2.0 {
                assert_eq!(y - a, x);
                checked += 1;
            }
        }
        assert!(checked > 100_000);
    }

    #[test]
    fn multiplication_factor() {
        assert!(is_lossless_mul_factor(2.0));
        assert_eq!((3.5 * 2.0) / 2.0, 3.5);
        assert!(is_lossless_mul_factor(2.5));
        assert_eq!((1.1f64 * 2.5) / 2.5, 1.1);
        assert!(!is_lossless_mul_factor(1.2));
        assert!(!is_lossless_mul_factor(f64::INFINITY));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let found = (0..1_000_000).any(|_| {
            let x: f64 = rng.random_range(1.0..2.0);
            (x * 1.2) / 1.2 != x
        });
        assert!(found);
    }

    #[test]
    fn target_region_examples() {
        assert_eq!(target_region(0, 1).unwrap(), (1.0, 1.5));
        assert_eq!(target_region(0, 52).unwrap(), (1.0, 1.0 + pow2(-52)));
        assert_eq!(target_region(10, 4).unwrap(), (1024.0, 1088.0));
        assert!(target_region(0, 0).is_err());
        assert!(target_region(0, 53).is_err());
        assert!(target_region(1024, 3).is_err());
        assert!(target_region(-1023, 3).is_err());
        let (lo, hi) = target_region(-1022, 52).unwrap();
        assert!(lo < hi);
    }

    #[test]
    fn target_region_shares_leading_bits() {
        for d in 1..=52u32 {
            let (lo, hi) = target_region(3, d).unwrap();
            let top = f64::from_bits(hi.to_bits() - 1);
            let s = shared_bits(&[lo, top]).unwrap();
            assert!(s.leading_mantissa_shared() >= d);
            assert_eq!(mantissa_of(lo) >> (52 - d), 0);
        }
    }

    #[test]
    fn loss_example() {
        let big = black_box(1e16);
        assert_eq!((black_box(3.5) + big) - big, 4.0);
    }

    #[test]
    fn rounding_mode_probe() {
        assert_eq!(ensure_round_to_nearest(), Ok(()));
    }
}
