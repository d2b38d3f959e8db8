//! Exact rational scalars and small numeric helpers.

use crate::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The scalar type used throughout the crate.
pub type Q = BigRational;

/// Rational from a pair of machine integers.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Rational from a machine integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p"` or `"p/q"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad integer {t:?}")))
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Q::new(parse_int(num)?, den))
        }
        None => Ok(Q::from_integer(parse_int(s)?)),
    }
}

/// Formats as `"p"` or `"p/q"` in lowest terms.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// The n-th Catalan number.
pub fn catalan(n: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..n {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 2);
    }
    c
}

/// Binomial coefficient.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut b = BigInt::one();
    for i in 0..k.min(n - k) {
        b = b * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    b
}

/// Deterministic source of small rationals for seeded property checks.
///
/// Numerators are drawn from `[-bound, bound]` and denominators from
/// `[1, bound]`, keeping exact arithmetic growth under control.
pub struct RatRng {
    rng: ChaCha8Rng,
    bound: i64,
}

impl RatRng {
    /// Seeded generator with the default bound of 10.
    pub fn new(seed: u64) -> Self {
        Self::with_bound(seed, 10)
    }

    /// Seeded generator with an explicit bound.
    pub fn with_bound(seed: u64, bound: i64) -> Self {
        RatRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bound,
        }
    }

    /// Next rational, possibly zero.
    pub fn next_q(&mut self) -> Q {
        let n = self.rng.gen_range(-self.bound..=self.bound);
        let d = self.rng.gen_range(1..=self.bound);
        q(n, d)
    }

    /// Next nonzero rational.
    pub fn next_nonzero(&mut self) -> Q {
        loop {
            let x = self.next_q();
            if !x.is_zero() {
                return x;
            }
        }
    }
}
