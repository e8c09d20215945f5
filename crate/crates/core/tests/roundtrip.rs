use proptest::prelude::*;

use fpprep::codec;
use fpprep::gd::{gd_compress, gd_decompress, GdArchive};
use fpprep::transforms::{self, Params, TransformError, TransformOptions};

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn supported_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        8 => (1u64..0x7fe, 0u64..(1 << 52)).prop_map(|(e, m)| f64::from_bits(e << 52 | m)),
        4 => 1.0f64..2.0,
        2 => (0u32..20_000).prop_map(|i| f64::from(i) / 100.0),
    ]
}

fn dataset() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(supported_value(), 1..60)
}

fn params() -> impl Strategy<Value = Params> {
    (1u32..=52, 1usize..12, 0u8..4).prop_map(|(d, k, t)| match t {
        0 => Params::Bins { k, d },
        1 => Params::MulShift { d },
        2 => Params::EvenOdd { d },
        _ => Params::Evenness { d },
    })
}

fn is_declined(e: &TransformError) -> bool {
    matches!(
        e,
        TransformError::Capacity { .. }
            | TransformError::NonConvergence { .. }
            | TransformError::InvalidParameter(_)
            | TransformError::RangeExhausted { .. }
            | TransformError::InfeasibleShift { .. }
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn forward_encode_decode_inverse(ds in dataset(), p in params()) {
        match transforms::forward(&ds, p) {
            Ok(pd) => {
                prop_assert!(transforms::shares_leading_bits(&pd.values, p.d()));
                let decoded = codec::decode(&codec::encode(&pd)).unwrap();
                prop_assert_eq!(bits(&transforms::inverse(&decoded).unwrap()), bits(&ds));
                if !pd.values.is_empty() {
                    let archive = GdArchive::from_bytes(&gd_compress(&pd.values).unwrap().to_bytes()).unwrap();
                    prop_assert_eq!(bits(&gd_decompress(&archive).unwrap()), bits(&pd.values));
                }
            }
            Err(e) => prop_assert!(is_declined(&e), "{e}"),
        }
    }

    #[test]
    fn checked_mode_agrees(ds in dataset(), p in params()) {
        let checked = TransformOptions { checked: true, ..Default::default() };
        let plain = transforms::forward(&ds, p);
        let strict = transforms::forward_with(&ds, p, &checked);
        match (plain, strict) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(bits(&a.values), bits(&b.values));
                prop_assert_eq!(bits(&transforms::inverse_with(&b, &checked).unwrap()), bits(&ds));
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.kind(), b.kind()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.err(), b.err()),
        }
    }

    #[test]
    fn unsupported_values_are_rejected(mut ds in dataset(), at in any::<prop::sample::Index>(), bad in prop_oneof![
        Just(f64::NAN), Just(f64::INFINITY), Just(-1.0), Just(-0.0), Just(f64::from_bits(1))
    ]) {
        let i = at.index(ds.len());
        ds[i] = bad;
        match transforms::forward(&ds, Params::Evenness { d: 4 }) {
            Err(TransformError::Unsupported { index, .. }) => prop_assert!(index <= i),
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn empty_input() {
    assert!(matches!(
        transforms::forward(&[], Params::MulShift { d: 3 }),
        Err(TransformError::EmptyInput)
    ));
}

#[test]
fn single_and_constant_inputs_bypass() {
    for ds in [vec![3.75], vec![42.0; 17], vec![0.0; 3]] {
        for p in [
            Params::Bins { k: 1, d: 52 },
            Params::Evenness { d: 52 },
            Params::EvenOdd { d: 1 },
        ] {
            let pd = transforms::forward(&ds, p).unwrap();
            assert_eq!(pd.technique(), transforms::Technique::Identity);
            assert_eq!(codec::metadata_size_bytes(&pd), 0);
            assert_eq!(bits(&transforms::inverse(&pd).unwrap()), bits(&ds));
        }
    }
}
