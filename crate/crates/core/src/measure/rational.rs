use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type ExactRational = BigRational;

pub fn ratio(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^-k`.
pub fn pow2_neg(k: u64) -> ExactRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// `num · 2^-k` for a natural numerator.
pub fn dyadic(num: &BigUint, k: u64) -> ExactRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::one() << k)
}

/// Lossy conversion used only for decimal convenience columns.
pub fn to_f64(r: &ExactRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale down huge operands before dividing.
            let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}
