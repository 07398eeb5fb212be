//! Random LP weights and the probability that they favor the planted support.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("need 1 <= k <= m - 1, got m = {m}, k = {k}")]
pub struct OutOfRange {
    pub m: usize,
    pub k: usize,
}

/// `m` i.i.d. exponential draws with the given rate.
pub fn sample_exp_weights<R: Rng + ?Sized>(m: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let d = Exp::new(rate).expect("rate must be positive and finite");
    (0..m).map(|_| d.sample(rng)).collect()
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

/// `(Σ_{j=k}^{m-1} C(m-1, j), 2^{m-1})` as exact integers.
pub fn weight_success_fraction(m: usize, k: usize) -> Result<(BigUint, BigUint), OutOfRange> {
    if m < 2 || k < 1 || k > m - 1 {
        return Err(OutOfRange { m, k });
    }
    let mut num = BigUint::zero();
    for j in k..m {
        num += binomial(m - 1, j);
    }
    Ok((num, BigUint::one() << (m - 1)))
}

/// Probability that the first `k` of `m` i.i.d. exponential weights sum to
/// less than the remaining `m - k`.
pub fn weight_success_probability(m: usize, k: usize) -> Result<f64, OutOfRange> {
    let (num, den) = weight_success_fraction(m, k)?;
    // 64 fractional bits keep full double precision
    let scaled: BigUint = (num << 64u32) / den;
    Ok(scaled.to_f64().expect("ratio is at most 1") / 2f64.powi(64))
}

/// Expected number of weight draws until one favors a planted support of
/// size `k` among `m` lines.
pub fn expected_iterations(m: usize, k: usize) -> Result<f64, OutOfRange> {
    weight_success_probability(m, k).map(|p| 1.0 / p)
}
