//! Polynomial relations among a parametrization.
//!
//! Given `G_1..G_n` in `m < n` variables, the products `G^a` with `|a| <= M`
//! outnumber the monomials they can span once `M` is large enough, so some
//! combination `sum_a c_a G^a` vanishes identically. The coefficients give a
//! nonzero `DeltaPhi` with `DeltaPhi(G) = 0`.

use std::collections::HashMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::RationalMatrix;
use crate::modular::{first_dependency_mod, primes, reduce, CrtAccumulator};
use crate::poly::{exponents_up_to, Exponent, Polynomial};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImplicitError {
    #[error("need more polynomials than variables, got {n} in {m} variables")]
    NotOverdetermined { n: usize, m: usize },
    #[error("parametrization polynomials have different arities")]
    ArityMismatch,
    #[error("maximum degree must be at least 1")]
    ZeroDegree,
    #[error("no relation up to degree {max_degree}; existence is guaranteed from degree {bound}")]
    DimensionNotExceeded { max_degree: u32, bound: u32 },
    #[error("no relation up to the guaranteed degree {bound}")]
    Exhausted { bound: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum KernelMethod {
    FractionFree,
    Multimodular { primes: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Implicitization {
    /// Nonzero relation in `n` variables with `delta(G) = 0`.
    pub delta: Polynomial,
    /// Total degree of `delta`, the smallest degree admitting a relation.
    pub degree: u32,
    /// Degree caps tried, in order.
    pub attempted: Vec<u32>,
    /// Smallest `M` with `C(M+n, n) > C(NM+m, m)`.
    pub bound: u32,
    pub kernel: KernelMethod,
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k.min(n));
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

/// Smallest `M >= 1` for which `n` polynomials of degree at most `inner` in `m`
/// variables must satisfy a relation of degree `M`.
pub fn dimension_bound(n: usize, m: usize, inner: u32) -> u32 {
    let (n, m, inner) = (n as u64, m as u64, u64::from(inner));
    (1u64..)
        .find(|&big_m| binomial(big_m + n, n) > binomial(inner * big_m + m, m))
        .expect("n > m") as u32
}

fn check_shape(gens: &[Polynomial]) -> Result<usize, ImplicitError> {
    let m = gens.first().map_or(0, Polynomial::arity);
    if gens.iter().any(|g| g.arity() != m) {
        return Err(ImplicitError::ArityMismatch);
    }
    if gens.len() <= m {
        return Err(ImplicitError::NotOverdetermined { n: gens.len(), m });
    }
    Ok(m)
}

/// Searches for a relation of degree at most `max_degree`, escalating the cap
/// from `max(2, N)` by doubling. The returned relation has the smallest
/// possible degree.
pub fn implicitization_certificate(gens: &[Polynomial], max_degree: u32) -> Result<Implicitization, ImplicitError> {
    let m = check_shape(gens)?;
    if max_degree == 0 {
        return Err(ImplicitError::ZeroDegree);
    }
    let inner = gens.iter().map(Polynomial::degree).max().unwrap_or(0);
    let bound = dimension_bound(gens.len(), m, inner);
    let mut cap = inner.max(2).min(max_degree);
    let mut attempted = Vec::new();
    loop {
        attempted.push(cap);
        let exponents = exponents_up_to(gens.len(), 0, cap);
        if let Some((delta, kernel)) = find_relation(gens, &exponents) {
            return Ok(Implicitization {
                degree: delta.degree(),
                delta,
                attempted,
                bound,
                kernel,
            });
        }
        if cap >= max_degree {
            break;
        }
        cap = (cap * 2).min(max_degree);
    }
    if max_degree < bound {
        Err(ImplicitError::DimensionNotExceeded { max_degree, bound })
    } else {
        Err(ImplicitError::Exhausted { bound })
    }
}

/// Entries above which the modular route is used.
const FRACTION_FREE_LIMIT: usize = 6_000;

/// First relation `sum_k c_k G^{exponents[k]} = 0` in the given column order,
/// as a polynomial. Exponent lists sorted by total degree yield a relation of
/// least degree.
pub fn find_relation(gens: &[Polynomial], exponents: &[Exponent]) -> Option<(Polynomial, KernelMethod)> {
    let m = gens.first().map_or(0, Polynomial::arity);
    let inner = gens.iter().map(Polynomial::degree).max().unwrap_or(0);
    let top = exponents.iter().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0);
    let rows = exponents_up_to(m, 0, inner * top).len();
    if rows.saturating_mul(exponents.len()) <= FRACTION_FREE_LIMIT {
        find_relation_fraction_free(gens, exponents).map(|p| (p, KernelMethod::FractionFree))
    } else {
        find_relation_multimodular(gens, exponents)
    }
}

fn relation_polynomial(n: usize, exponents: &[Exponent], coefficients: &[Rational]) -> Polynomial {
    Polynomial::from_terms(
        n,
        exponents
            .iter()
            .zip(coefficients)
            .map(|(e, c)| (e.clone(), c.clone())),
    )
    .expect("exponent length n")
}

/// `G^a` for every exponent, each computed from a cached predecessor.
fn exact_products(gens: &[Polynomial], exponents: &[Exponent]) -> Vec<Polynomial> {
    let m = gens.first().map_or(0, Polynomial::arity);
    let mut cache: HashMap<Exponent, Polynomial> = HashMap::new();
    cache.insert(vec![0; gens.len()], Polynomial::one(m));
    exponents
        .iter()
        .map(|a| product_from_cache(&mut cache, a, &|p, k| p * &gens[k]))
        .collect()
}

fn product_from_cache<P: Clone>(
    cache: &mut HashMap<Exponent, P>,
    a: &Exponent,
    times: &dyn Fn(&P, usize) -> P,
) -> P {
    if let Some(p) = cache.get(a) {
        return p.clone();
    }
    let k = a.iter().rposition(|&e| e > 0).expect("nonzero exponent");
    let mut parent = a.clone();
    parent[k] -= 1;
    let base = product_from_cache(cache, &parent, times);
    let p = times(&base, k);
    cache.insert(a.clone(), p.clone());
    p
}

/// Dense coefficient matrix of the products and Bareiss elimination.
pub fn find_relation_fraction_free(gens: &[Polynomial], exponents: &[Exponent]) -> Option<Polynomial> {
    let columns = exact_products(gens, exponents);
    let mut row_of: HashMap<Exponent, usize> = HashMap::new();
    for p in &columns {
        for (e, _) in p.terms() {
            let next = row_of.len();
            row_of.entry(e.clone()).or_insert(next);
        }
    }
    let mut matrix = RationalMatrix::zeros(row_of.len(), columns.len());
    for (c, p) in columns.iter().enumerate() {
        for (e, v) in p.terms() {
            matrix.set(row_of[e], c, v.clone());
        }
    }
    let dep = matrix.first_dependency()?;
    Some(relation_polynomial(gens.len(), exponents, &dep.coefficients))
}

type ModPoly = HashMap<Exponent, u64>;

fn mod_mul(a: &ModPoly, b: &ModPoly, p: u64) -> ModPoly {
    let mut out: ModPoly = HashMap::with_capacity(a.len() * b.len());
    for (ea, &ca) in a {
        for (eb, &cb) in b {
            let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let v = ((ca as u128 * cb as u128) % p as u128) as u64;
            let slot = out.entry(e).or_insert(0);
            *slot = (*slot + v) % p;
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

/// Same relation via elimination modulo word-sized primes, Chinese
/// remaindering and rational reconstruction; accepted only after the exact
/// composition check.
pub fn find_relation_multimodular(
    gens: &[Polynomial],
    exponents: &[Exponent],
) -> Option<(Polynomial, KernelMethod)> {
    const MAX_PRIMES: usize = 500;
    let m = gens.first().map_or(0, Polynomial::arity);
    let mut best_column: Option<usize> = None;
    let mut acc = CrtAccumulator::new(exponents.len());
    let mut used = 0;
    for p in primes().take(MAX_PRIMES) {
        let Some(reduced) = gens
            .iter()
            .map(|g| {
                g.terms()
                    .map(|(e, c)| reduce(c, p).map(|v| (e.clone(), v)))
                    .filter(|t| !matches!(t, Some((_, 0))))
                    .collect::<Option<ModPoly>>()
            })
            .collect::<Option<Vec<ModPoly>>>()
        else {
            continue;
        };
        let mut cache: HashMap<Exponent, ModPoly> = HashMap::new();
        cache.insert(vec![0; gens.len()], HashMap::from([(vec![0; m], 1u64)]));
        let sparse: Vec<ModPoly> = exponents
            .iter()
            .map(|a| product_from_cache(&mut cache, a, &|q, k| mod_mul(q, &reduced[k], p)))
            .collect();
        let mut row_of: HashMap<&Exponent, usize> = HashMap::new();
        for q in &sparse {
            for e in q.keys() {
                let next = row_of.len();
                row_of.entry(e).or_insert(next);
            }
        }
        let dense: Vec<Vec<u64>> = sparse
            .iter()
            .map(|q| {
                let mut col = vec![0u64; row_of.len()];
                for (e, &v) in q {
                    col[row_of[e]] = v;
                }
                col
            })
            .collect();
        // independence modulo one admissible prime rules out any relation
        let (column, relation) = first_dependency_mod(&dense, p)?;
        match best_column {
            Some(b) if column < b => continue,
            Some(b) if column == b => {}
            _ => {
                best_column = Some(column);
                acc = CrtAccumulator::new(exponents.len());
                used = 0;
            }
        }
        acc.add(&relation, p);
        used += 1;
        if used < 2 {
            continue;
        }
        if let Some(coefficients) = acc.reconstruct() {
            let delta = relation_polynomial(gens.len(), exponents, &coefficients);
            if !delta.is_zero() && delta.compose(gens).expect("arity").is_zero() {
                return Some((delta, KernelMethod::Multimodular { primes: used }));
            }
        }
    }
    panic!("no stable modular relation after {MAX_PRIMES} primes");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::random_polynomial;
    use crate::rational::{from_i64, ratio};

    fn t() -> Polynomial {
        Polynomial::var(1, 0)
    }

    fn x(k: usize) -> Polynomial {
        Polynomial::var(2, k)
    }

    #[test]
    fn parabola() {
        let gens = [t(), t().pow(2)];
        let r = implicitization_certificate(&gens, 2).unwrap();
        assert_eq!(r.degree, 2);
        assert!(r.delta.compose(&gens).unwrap().is_zero());
        // proportional to x1^2 - x2
        let expected = &x(0).pow(2) - &x(1);
        let scale = r.delta.coefficient(&[2, 0]);
        assert_eq!(r.delta, expected.scale(&scale));
    }

    #[test]
    fn affine_relation() {
        let one = Polynomial::constant(1, from_i64(1));
        let gens = [t(), &t() + &one];
        let r = implicitization_certificate(&gens, 1).unwrap();
        let expected = &(&x(1) - &x(0)) - &Polynomial::constant(2, from_i64(1));
        let scale = r.delta.coefficient(&[0, 1]);
        assert_eq!(r.delta, expected.scale(&scale));
        assert_eq!(r.degree, 1);
    }

    #[test]
    fn bounds() {
        assert_eq!(dimension_bound(2, 1, 2), 2);
        assert_eq!(dimension_bound(3, 2, 2), 8);
        assert_eq!(dimension_bound(2, 1, 1), 1);
        // one more candidate than target dimension
        let b = dimension_bound(3, 2, 3);
        assert!(binomial(u64::from(b) + 3, 3) > binomial(3 * u64::from(b) + 2, 2));
        assert!(binomial(u64::from(b) + 2, 3) <= binomial(3 * u64::from(b - 1) + 2, 2));
    }

    #[test]
    fn shape_errors() {
        assert_eq!(
            implicitization_certificate(&[t()], 3).unwrap_err(),
            ImplicitError::NotOverdetermined { n: 1, m: 1 }
        );
        assert_eq!(
            implicitization_certificate(&[t(), x(0)], 3).unwrap_err(),
            ImplicitError::ArityMismatch
        );
        assert_eq!(implicitization_certificate(&[t(), t()], 0).unwrap_err(), ImplicitError::ZeroDegree);
    }

    #[test]
    fn low_cap_reports_the_bound() {
        // a generic cubic curve pair needs degree 3
        let gens = [&t().pow(3) + &t(), &t().pow(2) - &t().pow(3).scale(&ratio(1, 2))];
        assert_eq!(
            implicitization_certificate(&gens, 2).unwrap_err(),
            ImplicitError::DimensionNotExceeded {
                max_degree: 2,
                bound: dimension_bound(2, 1, 3)
            }
        );
        let r = implicitization_certificate(&gens, 3).unwrap();
        assert_eq!(r.degree, 3);
        assert_eq!(r.attempted, vec![3]);
    }

    #[test]
    fn both_kernel_routes_agree() {
        for seed in 0..6 {
            let gens: Vec<Polynomial> = (0..3).map(|k| random_polynomial(2, 1 + (k % 2), seed * 7 + k as u64, 6)).collect();
            let exps = exponents_up_to(3, 0, 4);
            let a = find_relation_fraction_free(&gens, &exps).unwrap();
            let (b, method) = find_relation_multimodular(&gens, &exps).unwrap();
            assert_eq!(a, b, "seed {seed}");
            assert!(matches!(method, KernelMethod::Multimodular { .. }));
            assert!(a.compose(&gens).unwrap().is_zero());
        }
    }

    #[test]
    fn independent_columns_give_none_on_both_routes() {
        let gens = [t(), t().pow(2)];
        let exps = vec![vec![1, 0], vec![0, 1]];
        assert_eq!(find_relation_fraction_free(&gens, &exps), None);
        assert_eq!(find_relation_multimodular(&gens, &exps), None);
    }
}
