use num_rational::BigRational;
use num_traits::{One, Zero};

/// `𝒢(x) = {1/x}` with `𝒢(0) = 0`.
pub fn gauss(x: &BigRational) -> BigRational {
    if x.is_zero() {
        return BigRational::zero();
    }
    x.recip().fract()
}

/// `α_0..=α_n` and `β_k = α_0 ⋯ α_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussOrbit {
    pub alphas: Vec<BigRational>,
    pub betas: Vec<BigRational>,
}

pub fn gauss_orbit(x: &BigRational, n: usize) -> GaussOrbit {
    let mut alphas = Vec::with_capacity(n + 1);
    let mut betas = Vec::with_capacity(n + 1);
    let mut a = x.clone();
    let mut b = BigRational::one();
    for _ in 0..=n {
        b = &b * &a;
        alphas.push(a.clone());
        betas.push(b.clone());
        a = gauss(&a);
    }
    GaussOrbit { alphas, betas }
}
