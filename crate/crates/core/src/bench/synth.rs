//! Deterministic synthetic datasets.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `n` copies of one value.
    Constant,
    /// A single value; `n` is ignored.
    Single,
    /// Uniform in `[1, 2)`.
    Uniform,
    /// Absolute value of a normal sample with mean 50 and deviation 10.
    Gaussian,
    /// `i / 100` with `i` uniform in `[200, 12800)`.
    FareLike,
    /// Uniform mantissas spread over exponents -20..=20, about 5% zeros.
    MultiRegion,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Constant,
        Family::Single,
        Family::Uniform,
        Family::Gaussian,
        Family::FareLike,
        Family::MultiRegion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Single => "single",
            Family::Uniform => "uniform",
            Family::Gaussian => "gaussian",
            Family::FareLike => "fare-like",
            Family::MultiRegion => "multi-region",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown dataset family `{s}`"))
    }
}

pub fn generate(family: Family, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        Family::Constant => {
            let c = rng.random_range(0.5..1000.0);
            vec![c; n]
        }
        Family::Single => vec![rng.random_range(0.5..1000.0)],
        Family::Uniform => (0..n).map(|_| rng.random_range(1.0..2.0)).collect(),
        Family::Gaussian => {
            let normal = Normal::new(50.0, 10.0).expect("valid deviation");
            (0..n).map(|_| f64::abs(normal.sample(&mut rng))).collect()
        }
        Family::FareLike => fare_like(&mut rng, n),
        Family::MultiRegion => (0..n)
            .map(|_| {
                if rng.random_bool(0.05) {
                    0.0
                } else {
                    let e: i32 = rng.random_range(-20..=20);
                    rng.random_range(1.0..2.0) * 2f64.powi(e)
                }
            })
            .collect(),
    }
}

fn fare_like(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| f64::from(rng.random_range(200u32..12800)) / 100.0)
        .collect()
}
