//! Rational number helpers: exact parsing, bounded random draws and seed splitting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact rational used throughout the crate.
pub type Rational = BigRational;

/// Parses `"p/q"`, `"p"` or `"-p/q"`. Decimal points and exponents are rejected.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let valid = |s: &str| {
        let digits = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num) || !valid(den) {
        return None;
    }
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

pub fn from_i64(value: i64) -> Rational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Lossy conversion used only by the floating-point oracles.
pub fn to_f64(value: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}

/// Draws a rational with numerator in `[-bound, bound] \ {0}` and denominator in `[1, bound]`.
pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R, bound: u32) -> Rational {
    let bound = bound.max(1) as i64;
    let mut num = 0;
    while num == 0 {
        num = rng.gen_range(-bound..=bound);
    }
    let den = rng.gen_range(1..=bound);
    ratio(num, den)
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent sub-seed from `(seed, stream, index)`.
///
/// Pure function of its inputs, so sampled work can be split across threads
/// without changing results.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut x = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(17);
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub(crate) fn is_one(value: &Rational) -> bool {
    value.is_one()
}
