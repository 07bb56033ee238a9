use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{CfError, Result};

/// A growth function `P: ℕ → ℝ₊` used in the denominator conditions.
pub trait Growth: Send + Sync + fmt::Debug {
    /// Canonical spec string, parseable by [`GrowthRegistry::parse`].
    fn spec(&self) -> String;
    fn eval(&self, q: &BigInt) -> BigRational;
}

#[derive(Debug)]
struct Zero_;

impl Growth for Zero_ {
    fn spec(&self) -> String {
        "zero".into()
    }
    fn eval(&self, _q: &BigInt) -> BigRational {
        BigRational::zero()
    }
}

/// `P(q) = c · q^k`.
#[derive(Debug)]
struct Monomial {
    c: BigRational,
    k: u32,
}

impl Growth for Monomial {
    fn spec(&self) -> String {
        match self.k {
            1 => format!("linear:{}", self.c),
            _ => format!("power:{},{}", self.k, self.c),
        }
    }
    fn eval(&self, q: &BigInt) -> BigRational {
        &self.c * BigRational::from_integer(num_traits::pow(q.clone(), self.k as usize))
    }
}

/// `P(q) = b^q`, capped exponent to keep the numbers desk sized.
#[derive(Debug)]
struct Exponential {
    base: u32,
}

impl Growth for Exponential {
    fn spec(&self) -> String {
        format!("exp:{}", self.base)
    }
    fn eval(&self, q: &BigInt) -> BigRational {
        let e: usize = q.try_into().unwrap_or(usize::MAX).min(4096);
        BigRational::from_integer(num_traits::pow(BigInt::from(self.base), e))
    }
}

type Factory = fn(&str) -> Result<Box<dyn Growth>>;

fn parse_rational(name: &str, s: &str) -> Result<BigRational> {
    let bad = |msg: &str| CfError::GrowthParams { name: name.into(), msg: msg.into() };
    let s = s.trim();
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        BigRational::new(n, d)
    } else {
        BigRational::from_integer(s.parse().map_err(|_| bad("expected an integer or n/d"))?)
    };
    if r < BigRational::zero() {
        return Err(bad("coefficient must be non-negative"));
    }
    Ok(r)
}

fn make_zero(args: &str) -> Result<Box<dyn Growth>> {
    if !args.is_empty() {
        return Err(CfError::GrowthParams { name: "zero".into(), msg: "takes no arguments".into() });
    }
    Ok(Box::new(Zero_))
}

fn make_linear(args: &str) -> Result<Box<dyn Growth>> {
    let c = if args.is_empty() { BigRational::one() } else { parse_rational("linear", args)? };
    Ok(Box::new(Monomial { c, k: 1 }))
}

fn make_square(args: &str) -> Result<Box<dyn Growth>> {
    let c = if args.is_empty() { BigRational::one() } else { parse_rational("square", args)? };
    Ok(Box::new(Monomial { c, k: 2 }))
}

fn make_power(args: &str) -> Result<Box<dyn Growth>> {
    let bad = |msg: &str| CfError::GrowthParams { name: "power".into(), msg: msg.into() };
    let (k, c) = match args.split_once(',') {
        Some((k, c)) => (k, parse_rational("power", c)?),
        None => (args, BigRational::one()),
    };
    let k: u32 = k.trim().parse().map_err(|_| bad("exponent must be a small integer"))?;
    Ok(Box::new(Monomial { c, k }))
}

fn make_exp(args: &str) -> Result<Box<dyn Growth>> {
    let base = if args.is_empty() {
        2
    } else {
        args.trim().parse().map_err(|_| CfError::GrowthParams { name: "exp".into(), msg: "base must be a small integer".into() })?
    };
    Ok(Box::new(Exponential { base }))
}

/// Named growth functions, selected by strings such as `"linear:10"` or `"power:3,1/2"`.
pub struct GrowthRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for GrowthRegistry {
    fn default() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("zero", make_zero);
        r.register("linear", make_linear);
        r.register("square", make_square);
        r.register("power", make_power);
        r.register("exp", make_exp);
        r
    }
}

impl GrowthRegistry {
    pub fn register(&mut self, name: &'static str, f: Factory) {
        self.factories.insert(name, f);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn parse(&self, spec: &str) -> Result<Box<dyn Growth>> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let f = self.factories.get(name.trim()).ok_or_else(|| CfError::UnknownGrowth(name.trim().to_string()))?;
        f(args.trim())
    }
}
