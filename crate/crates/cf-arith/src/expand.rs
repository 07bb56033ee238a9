use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{CfError, Result};

/// Partial quotients `a_1, a_2, …` of a number in `(0,1)`; `a_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartialQuotients {
    terms: Vec<BigUint>,
}

impl PartialQuotients {
    pub fn new(terms: Vec<BigUint>) -> Result<Self> {
        if let Some(i) = terms.iter().position(|a| a.is_zero()) {
            return Err(CfError::Domain(format!("a_{} = 0; quotients must be >= 1", i + 1)));
        }
        Ok(Self { terms })
    }

    pub fn from_u64(terms: &[u64]) -> Result<Self> {
        Self::new(terms.iter().map(|&a| BigUint::from(a)).collect())
    }

    /// `a_n`, with `a_0 = 0`. Panics past the stored prefix.
    pub fn a(&self, n: usize) -> BigUint {
        if n == 0 {
            BigUint::zero()
        } else {
            self.terms[n - 1].clone()
        }
    }

    pub fn terms(&self) -> &[BigUint] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, a: BigUint) -> Result<()> {
        if a.is_zero() {
            return Err(CfError::Domain("quotients must be >= 1".into()));
        }
        self.terms.push(a);
        Ok(())
    }

    /// Replace `a_n` (1-based) with `value`.
    pub fn set(&mut self, n: usize, value: BigUint) -> Result<()> {
        if n == 0 || n > self.terms.len() {
            return Err(CfError::InsufficientTerms { needed: n, available: self.terms.len() });
        }
        if value.is_zero() {
            return Err(CfError::Domain("quotients must be >= 1".into()));
        }
        self.terms[n - 1] = value;
        Ok(())
    }
}

impl Serialize for PartialQuotients {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = self.terms.iter().map(|a| a.to_str_radix(10)).collect();
        strs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PartialQuotients {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        let mut terms = Vec::with_capacity(strs.len());
        for s in strs {
            let a = BigUint::parse_bytes(s.trim().as_bytes(), 10)
                .ok_or_else(|| serde::de::Error::custom(format!("not a decimal integer: {s:?}")))?;
            terms.push(a);
        }
        PartialQuotients::new(terms).map_err(serde::de::Error::custom)
    }
}

/// The `n`-th convergent `p_n / q_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub n: usize,
    pub p: BigInt,
    pub q: BigInt,
}

impl Convergent {
    pub fn value(&self) -> BigRational {
        BigRational::new(self.p.clone(), self.q.clone())
    }
}

/// Euclidean expansion of an exact rational in `(0,1)`.
pub fn cf_expand(x: &BigRational) -> Result<PartialQuotients> {
    if !x.is_positive() || *x >= BigRational::one() {
        return Err(CfError::Domain(format!("{x} is not in (0,1)")));
    }
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    let mut terms = Vec::new();
    // x = num/den; 1/x = den/num = a + r/num.
    while !num.is_zero() {
        let (a, r) = den.div_rem(&num);
        terms.push(a.to_biguint().expect("positive quotient"));
        den = num;
        num = r;
    }
    PartialQuotients::new(terms)
}

/// Convergents `(p_k, q_k)` for `k = 0..=n`.
pub fn convergents(pq: &PartialQuotients, n: usize) -> Result<Vec<Convergent>> {
    if n > pq.len() {
        return Err(CfError::InsufficientTerms { needed: n, available: pq.len() });
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(Convergent { n: 0, p: BigInt::zero(), q: BigInt::one() });
    if n == 0 {
        return Ok(out);
    }
    // Seed with (p_{-1}, q_{-1}) = (1, 0) so the three-term recurrence starts at k = 1.
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p_cur, mut q_cur) = (BigInt::zero(), BigInt::one());
    for k in 1..=n {
        let a = BigInt::from(pq.a(k));
        let p_next = &p_prev + &a * &p_cur;
        let q_next = &q_prev + &a * &q_cur;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        out.push(Convergent { n: k, p: p_cur.clone(), q: q_cur.clone() });
    }
    Ok(out)
}

/// Exact value `[0; a_1, …, a_N]` of the whole stored prefix.
pub fn value_of(pq: &PartialQuotients) -> BigRational {
    let mut acc = BigRational::zero();
    for a in pq.terms().iter().rev() {
        acc = (BigRational::from_integer(BigInt::from(a.clone())) + acc).recip();
    }
    acc
}
