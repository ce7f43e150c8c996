//! Exact multivariate polynomials over the rationals.
//!
//! A [`Polynomial`] stores a map from exponent vectors to nonzero rational
//! coefficients. Zero coefficients are never stored, so two polynomials are
//! equal exactly when their term maps are equal. Every node function, measured
//! function and certificate in this crate is one of these.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rational::{self, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid coefficient {0:?}")]
    InvalidCoefficient(String),
    #[error("degree guard exceeded: {0}")]
    DegreeGuard(String),
}

/// Exponent vector of a monomial; its length equals the polynomial arity.
pub type Exponent = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Exponent, Rational>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Self {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, Rational::one())
    }

    pub fn constant(arity: usize, value: Rational) -> Self {
        Self::monomial(arity, vec![0; arity], value)
    }

    /// The coordinate polynomial `x_index`.
    pub fn var(arity: usize, index: usize) -> Self {
        assert!(index < arity, "variable {index} out of range for arity {arity}");
        let mut exp = vec![0; arity];
        exp[index] = 1;
        Self::monomial(arity, exp, Rational::one())
    }

    pub fn monomial(arity: usize, exp: Exponent, coef: Rational) -> Self {
        assert_eq!(exp.len(), arity, "exponent length must equal arity");
        let mut terms = BTreeMap::new();
        if !coef.is_zero() {
            terms.insert(exp, coef);
        }
        Self { arity, terms }
    }

    /// Builds a polynomial from possibly repeated, possibly zero terms.
    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Exponent, Rational)>,
    {
        let mut acc: BTreeMap<Exponent, Rational> = BTreeMap::new();
        for (exp, coef) in terms {
            if exp.len() != arity {
                return Err(PolyError::ArityMismatch {
                    expected: arity,
                    found: exp.len(),
                });
            }
            *acc.entry(exp).or_insert_with(Rational::zero) += coef;
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Self { arity, terms: acc })
    }

    fn from_hash(arity: usize, acc: HashMap<Exponent, Rational>) -> Self {
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Self { arity, terms }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical (lexicographic exponent) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exp: &[u32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.arity])
    }

    /// Maximum total degree over the terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.keys().any(|e| e[var] > 0)
    }

    fn check_arity(&self, other: &Self) -> Result<(), PolyError> {
        if self.arity != other.arity {
            return Err(PolyError::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        let mut terms = self.terms.clone();
        for (exp, coef) in &other.terms {
            let entry = terms.entry(exp.clone()).or_insert_with(Rational::zero);
            *entry += coef;
            if entry.is_zero() {
                terms.remove(exp);
            }
        }
        Ok(Self {
            arity: self.arity,
            terms,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.arity));
        }
        let mut acc: HashMap<Exponent, Rational> =
            HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exp: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(exp).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        Ok(Self::from_hash(self.arity, acc))
    }

    fn neg_ref(&self) -> Self {
        Self {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero(self.arity);
        }
        Self {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c * factor))
                .collect(),
        }
    }

    pub fn pow(&self, exponent: u32) -> Self {
        let mut result = Self::one(self.arity);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Substitutes `inners[k]` for variable `k`. All inners must share one arity,
    /// which becomes the arity of the result.
    pub fn compose(&self, inners: &[Polynomial]) -> Result<Self, PolyError> {
        if inners.len() != self.arity {
            return Err(PolyError::ArityMismatch {
                expected: self.arity,
                found: inners.len(),
            });
        }
        let out_arity = match inners.first() {
            Some(p) => p.arity,
            // arity-0 outer: a constant, kept at arity 0
            None => 0,
        };
        if let Some(bad) = inners.iter().find(|p| p.arity != out_arity) {
            return Err(PolyError::ArityMismatch {
                expected: out_arity,
                found: bad.arity,
            });
        }
        let mut powers = PowerCache::new(inners);
        let mut acc: HashMap<Exponent, Rational> = HashMap::new();
        for (exp, coef) in &self.terms {
            let mut term = Self::constant(out_arity, coef.clone());
            for (var, &e) in exp.iter().enumerate() {
                if e > 0 {
                    term = &term * powers.get(var, e);
                }
            }
            for (te, tc) in term.terms {
                *acc.entry(te).or_insert_with(Rational::zero) += tc;
            }
        }
        Ok(Self::from_hash(out_arity, acc))
    }

    /// Partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Self {
        assert!(var < self.arity, "variable {var} out of range");
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[var] > 0)
            .map(|(e, c)| {
                let mut exp = e.clone();
                let k = exp[var];
                exp[var] -= 1;
                (exp, c * rational::from_i64(k as i64))
            })
            .collect();
        Self {
            arity: self.arity,
            terms,
        }
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        if point.len() != self.arity {
            return Err(PolyError::ArityMismatch {
                expected: self.arity,
                found: point.len(),
            });
        }
        let mut power_cache: Vec<Vec<Rational>> =
            point.iter().map(|x| vec![Rational::one(), x.clone()]).collect();
        let mut total = Rational::zero();
        for (exp, coef) in &self.terms {
            let mut term = coef.clone();
            for (var, &e) in exp.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut power_cache[var];
                while cache.len() <= e as usize {
                    let next = cache.last().unwrap() * &point[var];
                    cache.push(next);
                }
                term *= &cache[e as usize];
            }
            total += term;
        }
        Ok(total)
    }

    /// Floating-point evaluation; only for finite-difference oracles.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.arity);
        self.terms
            .iter()
            .map(|(exp, coef)| {
                exp.iter()
                    .zip(point)
                    .fold(rational::to_f64(coef), |acc, (&e, x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// Re-expresses this polynomial over `new_arity` variables, sending variable
    /// `k` to `mapping[k]`.
    pub fn embed(&self, new_arity: usize, mapping: &[usize]) -> Self {
        assert_eq!(mapping.len(), self.arity);
        let mut acc: HashMap<Exponent, Rational> = HashMap::new();
        for (exp, coef) in &self.terms {
            let mut out = vec![0; new_arity];
            for (k, &e) in exp.iter().enumerate() {
                out[mapping[k]] += e;
            }
            *acc.entry(out).or_insert_with(Rational::zero) += coef;
        }
        Self::from_hash(new_arity, acc)
    }

    /// Splits off the univariate parts.
    ///
    /// `univariate[j]` holds every monomial of degree at least one that involves
    /// only variable `j`; `cross` holds the constant term and every monomial in
    /// two or more variables. The sum of all parts is `self`.
    pub fn decompose(&self) -> Decomposition {
        let mut univariate: Vec<BTreeMap<Exponent, Rational>> = vec![BTreeMap::new(); self.arity];
        let mut cross = BTreeMap::new();
        for (exp, coef) in &self.terms {
            let mut support = exp.iter().enumerate().filter(|(_, &e)| e > 0);
            match (support.next(), support.next()) {
                (Some((var, _)), None) => {
                    univariate[var].insert(exp.clone(), coef.clone());
                }
                _ => {
                    cross.insert(exp.clone(), coef.clone());
                }
            }
        }
        Decomposition {
            univariate: univariate
                .into_iter()
                .map(|terms| Self {
                    arity: self.arity,
                    terms,
                })
                .collect(),
            cross: Self {
                arity: self.arity,
                terms: cross,
            },
        }
    }

    /// The univariate polynomial obtained by restricting to variable `var`'s
    /// own monomials, written as an arity-1 polynomial.
    pub fn univariate_in(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().enumerate().all(|(k, &x)| k == var || x == 0))
            .map(|(e, c)| (vec![e[var]], c.clone()))
            .collect();
        Self { arity: 1, terms }
    }
}

/// Result of [`Polynomial::decompose`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub univariate: Vec<Polynomial>,
    pub cross: Polynomial,
}

impl Decomposition {
    pub fn recompose(&self) -> Polynomial {
        self.univariate
            .iter()
            .fold(self.cross.clone(), |acc, f| &acc + f)
    }

    pub fn is_additive(&self) -> bool {
        self.cross.is_zero()
    }
}

/// Lazily computed powers `inners[var]^e`.
pub(crate) struct PowerCache<'a> {
    bases: &'a [Polynomial],
    powers: Vec<Vec<Polynomial>>,
}

impl<'a> PowerCache<'a> {
    pub(crate) fn new(bases: &'a [Polynomial]) -> Self {
        Self {
            bases,
            powers: bases
                .iter()
                .map(|b| vec![Polynomial::one(b.arity), b.clone()])
                .collect(),
        }
    }

    pub(crate) fn get(&mut self, var: usize, e: u32) -> &Polynomial {
        let cache = &mut self.powers[var];
        while cache.len() <= e as usize {
            let next = cache.last().unwrap() * &self.bases[var];
            cache.push(next);
        }
        &cache[e as usize]
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial arity mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial arity mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial arity mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.neg_ref()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // highest degree first reads more naturally
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (k, (exp, coef)) in terms.into_iter().enumerate() {
            let negative = coef.is_negative();
            let magnitude = coef.abs();
            if k == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            let vars: Vec<String> = exp
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        format!("x{}", v + 1)
                    } else {
                        format!("x{}^{}", v + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{magnitude}")?;
            } else if rational::is_one(&magnitude) {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", magnitude, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// All exponent vectors of total degree in `[min_degree, max_degree]`, ordered by
/// total degree and then lexicographically.
pub fn exponents_up_to(arity: usize, min_degree: u32, max_degree: u32) -> Vec<Exponent> {
    fn fill(prefix: &mut Exponent, arity: usize, remaining: u32, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == arity {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            fill(prefix, arity, remaining - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in min_degree..=max_degree {
        if arity == 0 {
            if d == 0 {
                out.push(Vec::new());
            }
            continue;
        }
        fill(&mut Vec::with_capacity(arity), arity, d, &mut out);
    }
    out
}

/// Draws a polynomial whose every monomial of total degree in
/// `[min_degree, degree]` carries a nonzero bounded random rational coefficient.
pub fn random_polynomial_with<R: Rng + ?Sized>(
    rng: &mut R,
    arity: usize,
    min_degree: u32,
    degree: u32,
    coeff_bound: u32,
) -> Polynomial {
    let terms = exponents_up_to(arity, min_degree, degree)
        .into_iter()
        .map(|e| (e, rational::random_nonzero(rng, coeff_bound)))
        .collect();
    Polynomial { arity, terms }
}

/// Dense random polynomial of total degree `degree`, including the constant
/// term, deterministic in `seed`. Higher-order tails are identically zero.
pub fn random_polynomial(arity: usize, degree: u32, seed: u64, coeff_bound: u32) -> Polynomial {
    assert!(degree >= 1, "degree must be at least 1");
    let mut rng = rational::rng_from_seed(seed);
    random_polynomial_with(&mut rng, arity, 0, degree, coeff_bound)
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    coef: String,
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    arity: usize,
    terms: Vec<TermJson>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PolynomialJson {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exp: e.clone(),
                    coef: rational::format_rational(c),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = PolynomialJson::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(raw.terms.len());
        for t in raw.terms {
            let coef = rational::parse_rational(&t.coef)
                .ok_or_else(|| D::Error::custom(PolyError::InvalidCoefficient(t.coef.clone())))?;
            terms.push((t.exp, coef));
        }
        Polynomial::from_terms(raw.arity, terms).map_err(D::Error::custom)
    }
}
