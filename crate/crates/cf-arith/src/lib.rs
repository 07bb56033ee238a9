//! Exact continued-fraction arithmetic.
//!
//! Partial quotients, convergents, the Gauss map orbit with the derived
//! sequences `α_n` and `β_n`, growth-condition checks, and construction of
//! Liouville-type rotation numbers. Everything here is exact big-integer
//! arithmetic; floats only appear in [`RotationNumber::to_f64`].

mod expand;
mod gauss;
mod growth;
mod rotation;
mod synth;

pub use expand::{cf_expand, convergents, value_of, Convergent, PartialQuotients};
pub use gauss::{gauss, gauss_orbit, GaussOrbit};
pub use growth::{Growth, GrowthRegistry};
pub use rotation::RotationNumber;
pub use synth::{check_cp_membership, synthesize_alpha};

pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CfError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient terms: need {needed}, have {available}")]
    InsufficientTerms { needed: usize, available: usize },
    #[error("unknown growth function `{0}`")]
    UnknownGrowth(String),
    #[error("bad growth parameters for `{name}`: {msg}")]
    GrowthParams { name: String, msg: String },
}

pub type Result<T> = std::result::Result<T, CfError>;

/// Float conversion of an exact rational, accurate to within one ulp.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::{Signed, ToPrimitive, Zero};
    if x.is_zero() {
        return 0.0;
    }
    let neg = x.is_negative();
    let num = x.numer().abs().to_biguint().unwrap();
    let den = x.denom().abs().to_biguint().unwrap();
    // Scale so the integer quotient carries at least 64 significant bits.
    let shift = 64i64 - (num.bits() as i64 - den.bits() as i64);
    let (n, d) = if shift >= 0 { (num << (shift as usize), den) } else { (num, den << ((-shift) as usize)) };
    let quot = n / d;
    let mant = quot.to_f64().unwrap_or(f64::INFINITY);
    let v = ldexp(mant, -shift);
    if neg {
        -v
    } else {
        v
    }
}

fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}
