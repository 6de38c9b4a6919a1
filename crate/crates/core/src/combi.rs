//! Exact combinatorics over multiindices.
//!
//! A multiindex `alpha = (alpha_1, ..., alpha_n)` of order `k = |alpha|_1`
//! indexes the terms of the expansion of `<t, s>^k`. The constant
//!
//! ```text
//! c_{2k}^{2k} = sum_{|alpha|_1 = k} binom(k, alpha)^2 / binom(2k, 2 alpha)
//!             = binom(2k, k)^{-1} sum_{|alpha|_1 = k} prod_i binom(2 alpha_i, alpha_i)
//! ```
//!
//! bounds the `2k`-th moment of `||X||_{Z_{2k}(X)}` for unconditional `X`.
//! Both forms are computed in exact rational arithmetic.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest number of terms [`c2k`] is willing to sum.
pub const MAX_TERMS: u64 = 100_000_000;

/// Nonnegative integer vector; its order is the sum of entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Multiindex(Vec<u32>);

impl Multiindex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|alpha|_1`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^alpha = prod_i x_i^{alpha_i}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&a, &xi)| xi.powi(a as i32)).product()
    }

    /// Multinomial coefficient `m! / prod_i alpha_i!`, `m = |alpha|_1`.
    pub fn multinomial(&self) -> BigUint {
        let mut acc = BigUint::one();
        let mut m = 0u32;
        for &a in &self.0 {
            for j in 1..=a {
                m += 1;
                acc *= m;
                acc /= j;
            }
        }
        acc
    }

    /// `binom(2|alpha|, 2 alpha)`.
    pub fn doubled_multinomial(&self) -> BigUint {
        Multiindex(self.0.iter().map(|a| 2 * a).collect()).multinomial()
    }
}

/// Colexicographic stream of all multiindices of length `n` and order `k`.
///
/// The first index is `(k, 0, ..., 0)` and the last is `(0, ..., 0, k)`.
#[derive(Debug, Clone)]
pub struct Multiindices {
    current: Option<Vec<u32>>,
}

impl Iterator for Multiindices {
    type Item = Multiindex;

    fn next(&mut self) -> Option<Multiindex> {
        let cur = self.current.take()?;
        let out = Multiindex(cur.clone());
        let n = cur.len();
        if let Some(f) = cur.iter().position(|&a| a > 0) {
            if f + 1 < n {
                let mut nxt = cur;
                let mass = nxt[f];
                nxt[f] = 0;
                nxt[f + 1] += 1;
                nxt[0] = mass - 1;
                self.current = Some(nxt);
            }
        }
        Some(out)
    }
}

/// All `alpha` with `len n` and `|alpha|_1 = k`, each exactly once.
pub fn enumerate_multiindices(n: usize, k: u32) -> Multiindices {
    assert!(n >= 1, "multiindices need at least one coordinate");
    let mut first = vec![0; n];
    first[0] = k;
    Multiindices { current: Some(first) }
}

/// `binom(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// Reduced rational with arbitrary-precision numerator and denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Self(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(v: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(v.into()))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Natural logarithm, accurate for values far outside the `f64` range.
    pub fn ln(&self) -> f64 {
        big_ln(self.0.numer()) - big_ln(self.0.denom())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| self.ln().exp())
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::ops::Add for &ExactRational {
    type Output = ExactRational;
    fn add(self, rhs: Self) -> ExactRational {
        ExactRational(&self.0 + &rhs.0)
    }
}

impl std::ops::Mul for &ExactRational {
    type Output = ExactRational;
    fn mul(self, rhs: Self) -> ExactRational {
        ExactRational(&self.0 * &rhs.0)
    }
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").abs().ln();
    }
    let shift = bits - 64;
    let top = (x.magnitude() >> shift).to_f64().expect("64-bit head");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `c_{2k}^{2k}` as an exact rational together with `c_{2k}` as a float.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C2k {
    pub n: usize,
    pub k: u32,
    pub exact: ExactRational,
    pub value: f64,
}

fn guard_terms(n: usize, k: u32) -> Result<u64> {
    let terms = binomial(n as u64 + k as u64 - 1, k as u64);
    match terms.to_u64() {
        Some(t) if t <= MAX_TERMS => Ok(t),
        _ => Err(Error::ResourceGuard(format!(
            "c2k(n={n}, k={k}) would sum {terms} terms (limit {MAX_TERMS})"
        ))),
    }
}

fn central_binomials(k: u32) -> Vec<BigUint> {
    (0..=k as u64).map(|l| binomial(2 * l, l)).collect()
}

/// `c_{2k}` via `binom(2k,k)^{-1} sum_alpha prod_i binom(2 alpha_i, alpha_i)`.
pub fn c2k(n: usize, k: u32) -> Result<C2k> {
    if n == 0 || k == 0 {
        return Err(crate::error::invalid("c2k needs n >= 1 and k >= 1"));
    }
    guard_terms(n, k)?;
    let central = central_binomials(k);
    let mut sum = BigUint::zero();
    for alpha in enumerate_multiindices(n, k) {
        let mut term = BigUint::one();
        for &a in alpha.entries() {
            if a > 0 {
                term *= &central[a as usize];
            }
        }
        sum += term;
    }
    let den = central[k as usize].clone();
    let exact = ExactRational::new(BigInt::from(sum), BigInt::from(den));
    let value = (exact.ln() / (2.0 * k as f64)).exp();
    Ok(C2k { n, k, exact, value })
}

/// `c_{2k}^{2k}` summed term by term from the definition
/// `binom(k, alpha)^2 / binom(2k, 2 alpha)`.
pub fn c2k_direct(n: usize, k: u32) -> Result<ExactRational> {
    if n == 0 || k == 0 {
        return Err(crate::error::invalid("c2k needs n >= 1 and k >= 1"));
    }
    guard_terms(n, k)?;
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for alpha in enumerate_multiindices(n, k) {
        let m = BigInt::from(alpha.multinomial());
        let d = BigInt::from(alpha.doubled_multinomial());
        // num/den + m^2/d
        let l = den.lcm(&d);
        num = num * (&l / &den) + &m * &m * (&l / &d);
        den = l;
    }
    Ok(ExactRational::new(num, den))
}

/// Exact bounds `4^{-k} binom(n+k-1, k) <= c_{2k}^{2k} <= 4^k binom(n+k-1, k)`.
pub fn c2k_bounds(n: usize, k: u32) -> (ExactRational, ExactRational) {
    let count = BigInt::from(binomial(n as u64 + k as u64 - 1, k as u64));
    let four_k = BigInt::from(4u32).pow(k);
    (ExactRational::new(count.clone(), four_k.clone()), ExactRational::from_integer(count * four_k))
}
