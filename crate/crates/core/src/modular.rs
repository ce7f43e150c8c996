//! Column relations over `Z/p` and their lift back to the rationals.
//!
//! Large implicitization systems are solved one word-sized prime at a time,
//! combined by the Chinese remainder theorem and lifted by rational
//! reconstruction. The caller's exact check decides when a lift is correct,
//! so the answer never rests on a modular computation alone.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below `2^62`, largest first.
pub(crate) fn primes() -> impl Iterator<Item = u64> {
    let mut candidate = (1u64 << 62) - 1;
    std::iter::from_fn(move || {
        while !is_prime(candidate) {
            candidate -= 2;
        }
        let p = candidate;
        candidate -= 2;
        Some(p)
    })
}

/// Image of a rational in `Z/p`; `None` when `p` divides the denominator.
pub(crate) fn reduce(value: &Rational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let den = value.denom().mod_floor(&pb);
    if den.is_zero() {
        return None;
    }
    let num = value.numer().mod_floor(&pb);
    let to_u64 = |v: BigInt| v.to_u64_digits().1.first().copied().unwrap_or(0);
    Some(mul_mod(to_u64(num), inv_mod(to_u64(den), p), p))
}

/// First column that is a combination of earlier ones, over `Z/p`, with the
/// relation normalized to 1 at that column. Columns all have equal length.
pub(crate) fn first_dependency_mod(columns: &[Vec<u64>], p: u64) -> Option<(usize, Vec<u64>)> {
    // reduced basis vectors, each with its pivot row and its expression in
    // the original columns
    let mut basis: Vec<(usize, Vec<u64>, Vec<u64>)> = Vec::new();
    for (c, column) in columns.iter().enumerate() {
        let mut v = column.clone();
        let mut combo = vec![0u64; c + 1];
        combo[c] = 1;
        for (pivot, b, b_combo) in &basis {
            let f = v[*pivot];
            if f == 0 {
                continue;
            }
            let neg = p - f;
            for (x, y) in v.iter_mut().zip(b) {
                if *y != 0 {
                    *x = (*x + mul_mod(neg, *y, p)) % p;
                }
            }
            for (x, y) in combo.iter_mut().zip(b_combo) {
                if *y != 0 {
                    *x = (*x + mul_mod(neg, *y, p)) % p;
                }
            }
        }
        match v.iter().position(|&x| x != 0) {
            None => {
                combo.resize(columns.len(), 0);
                return Some((c, combo));
            }
            Some(pivot) => {
                let inv = inv_mod(v[pivot], p);
                v.iter_mut().for_each(|x| *x = mul_mod(*x, inv, p));
                combo.iter_mut().for_each(|x| *x = mul_mod(*x, inv, p));
                basis.push((pivot, v, combo));
            }
        }
    }
    None
}

/// Smallest-height `a/b` with `a ≡ value * b (mod modulus)`, if one with
/// `|a|, b ≤ sqrt(modulus / 2)` exists.
pub(crate) fn rational_reconstruction(value: &BigInt, modulus: &BigInt) -> Option<Rational> {
    let bound = (modulus / 2u32).sqrt();
    let (mut r0, mut r1) = (modulus.clone(), value.mod_floor(modulus));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    let check = (&r1 - value * &t1).mod_floor(modulus);
    if !check.is_zero() {
        return None;
    }
    let (num, den) = if t1.sign() == Sign::Minus {
        (-r1, -t1)
    } else {
        (r1, t1)
    };
    Some(Rational::new(num, den))
}

/// Residues of a relation accumulated across primes.
pub(crate) struct CrtAccumulator {
    modulus: BigInt,
    residues: Vec<BigInt>,
}

impl CrtAccumulator {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            modulus: BigInt::one(),
            residues: vec![BigInt::zero(); len],
        }
    }

    pub(crate) fn add(&mut self, values: &[u64], p: u64) {
        let pb = BigInt::from(p);
        let m_mod_p = reduce(&Rational::from_integer(self.modulus.clone()), p).expect("coprime");
        let m_inv = BigInt::from(inv_mod(m_mod_p, p));
        for (r, &s) in self.residues.iter_mut().zip(values) {
            // r + M * ((s - r) * M^-1 mod p)
            let t = ((BigInt::from(s) - &*r) * &m_inv).mod_floor(&pb);
            *r += &self.modulus * t;
        }
        self.modulus *= pb;
    }

    pub(crate) fn reconstruct(&self) -> Option<Vec<Rational>> {
        self.residues
            .iter()
            .map(|r| rational_reconstruction(r, &self.modulus))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_i64, ratio};

    #[test]
    fn first_primes_are_prime_and_descending() {
        let ps: Vec<u64> = primes().take(4).collect();
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
        assert!(ps[0] < 1 << 62);
        // trial division on a smaller prime found the same way
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }

    #[test]
    fn reduce_and_reconstruct_round_trip() {
        let p = primes().next().unwrap();
        let q = primes().nth(1).unwrap();
        for value in [ratio(-22, 7), ratio(355, 113), from_i64(0), ratio(1, 1_000_003)] {
            let mut acc = CrtAccumulator::new(1);
            acc.add(&[reduce(&value, p).unwrap()], p);
            acc.add(&[reduce(&value, q).unwrap()], q);
            assert_eq!(acc.reconstruct().unwrap(), vec![value]);
        }
        assert_eq!(reduce(&ratio(1, 7), 7), None);
    }

    #[test]
    fn modular_dependency_on_small_columns() {
        let p = 1_000_000_007;
        // c2 = 2 c0 + 3 c1
        let cols = vec![vec![1, 0, 4], vec![0, 1, 5], vec![2, 3, 23], vec![1, 1, 1]];
        let (c, x) = first_dependency_mod(&cols, p).unwrap();
        assert_eq!(c, 2);
        assert_eq!(x, vec![p - 2, p - 3, 1, 0]);
        assert_eq!(first_dependency_mod(&cols[..2], p), None);
    }
}
