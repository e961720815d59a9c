//! Counting and tail lemmas, pairing bijections, and the hardness/escape
//! schedules.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::measure::ExactRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("value list is empty")]
    EmptyInput,
    #[error("alpha must be positive")]
    NonPositiveAlpha,
    #[error("exponent d = {got} is below the minimum {min}")]
    ExponentTooSmall { got: u32, min: u32 },
    #[error("argument must be positive")]
    NonPositive,
    #[error("schedule table has no entry for ({0}, {1})")]
    MissingEntry(u64, u64),
    #[error("schedule table line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Outcome of a counting check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovReport {
    pub count: usize,
    pub bound: ExactRational,
    pub holds: bool,
}

/// Counts the values exceeding `α·ε` and compares the count with `N/α`.
///
/// `holds` is the implication "mean ≤ ε ⇒ count < N/α", evaluated exactly.
pub fn markov_exceed_count(
    values: &[ExactRational],
    epsilon: &ExactRational,
    alpha: &ExactRational,
) -> Result<MarkovReport, BoundsError> {
    if values.is_empty() {
        return Err(BoundsError::EmptyInput);
    }
    if *alpha <= ExactRational::zero() {
        return Err(BoundsError::NonPositiveAlpha);
    }
    let n = BigRational::from_integer(BigInt::from(values.len()));
    let threshold = alpha * epsilon;
    let count = values.iter().filter(|v| **v > threshold).count();
    let bound = &n / alpha;
    let mean: ExactRational = values.iter().sum::<ExactRational>() / &n;
    let below = BigRational::from_integer(BigInt::from(count)) < bound;
    Ok(MarkovReport { count, holds: mean > *epsilon || below, bound })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailReport {
    /// Exact partial sum `Σ_{k=n}^{n+terms} 1/k^d`.
    pub lower: ExactRational,
    /// Integral majorant of the remainder, `1/((d−1)(n+terms)^{d−1})`.
    pub remainder: ExactRational,
    pub bound: ExactRational,
    pub holds: bool,
}

/// Certifies `Σ_{k≥n} 1/k^d ≤ 2/n` with an exact partial sum plus the
/// integral majorant of the tail.
pub fn tail_bound_check(n: u64, d: u32, partial_terms: u64) -> Result<TailReport, BoundsError> {
    if d < 2 {
        return Err(BoundsError::ExponentTooSmall { got: d, min: 2 });
    }
    if n == 0 || partial_terms == 0 {
        return Err(BoundsError::NonPositive);
    }
    let last = n + partial_terms;
    let lower: ExactRational = (n..=last)
        .map(|k| BigRational::new(BigInt::one(), BigInt::from(k).pow(d)))
        .sum();
    let remainder = BigRational::new(BigInt::one(), BigInt::from(d - 1) * BigInt::from(last).pow(d - 1));
    let bound = BigRational::new(BigInt::from(2), BigInt::from(n));
    let holds = &lower + &remainder <= bound;
    Ok(TailReport { lower, remainder, bound, holds })
}

/// `2^n ≥ n^d` for every `n ∈ [d², n_max]`, exact integer arithmetic.
pub fn power_threshold_check(d: u32, n_max: u64) -> Result<bool, BoundsError> {
    if d < 4 {
        return Err(BoundsError::ExponentTooSmall { got: d, min: 4 });
    }
    let start = u64::from(d) * u64::from(d);
    Ok((start..=n_max).all(|n| BigUint::one() << n >= BigUint::from(n).pow(d)))
}

/// `c(m,n) = (m+n)(m+n+1)/2 + n`.
pub fn cantor_pair(m: u64, n: u64) -> u64 {
    let s = m + n;
    s * (s + 1) / 2 + n
}

/// Inverse of [`cantor_pair`]. For a fixed first component the second one
/// increases with `k`.
pub fn cantor_unpair(k: u64) -> (u64, u64) {
    let mut w = ((8 * k as u128 + 1).isqrt() as u64 - 1) / 2;
    // Guard against rounding at the boundary of a diagonal.
    while w * (w + 1) / 2 > k {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= k {
        w += 1;
    }
    let n = k - w * (w + 1) / 2;
    (w - n, n)
}

/// Bijection `N⁺ → {(i,d) : i ≥ 1, d ≥ 2}` built on the Cantor pairing.
pub fn phi(m: u64) -> (u64, u32) {
    assert!(m >= 1, "phi is defined on positive integers");
    let (a, b) = cantor_unpair(m - 1);
    (a + 1, b as u32 + 2)
}

pub fn phi_inverse(i: u64, d: u32) -> u64 {
    assert!(i >= 1 && d >= 2, "phi_inverse needs i ≥ 1 and d ≥ 2");
    cantor_pair(i - 1, u64::from(d) - 2) + 1
}

/// `f(k,d) = max{(2k+d+1)², 2C}`.
pub fn dlog_schedule(k: u64, d: u64, shoup_constant: u64) -> BigUint {
    let base = BigUint::from(2 * k + d + 1);
    let square = &base * &base;
    let doubled = BigUint::from(2 * shoup_constant);
    square.max(doubled)
}

/// A computable cutoff `f: N⁺ × N⁺ → N⁺`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// The discrete-log schedule with a user-supplied Shoup constant.
    DlogPaper { shoup_constant: u64 },
    Constant(BigUint),
    /// Explicit `(k,d) → N` table; lookups outside it are errors.
    Table(BTreeMap<(u64, u64), BigUint>),
}

impl Schedule {
    pub fn eval(&self, k: u64, d: u64) -> Result<BigUint, BoundsError> {
        if k == 0 || d == 0 {
            return Err(BoundsError::NonPositive);
        }
        match self {
            Schedule::DlogPaper { shoup_constant } => Ok(dlog_schedule(k, d, *shoup_constant)),
            Schedule::Constant(v) => Ok(v.clone()),
            Schedule::Table(t) => t.get(&(k, d)).cloned().ok_or(BoundsError::MissingEntry(k, d)),
        }
    }

    /// Parses `k,d = N` lines; `#` starts a comment.
    pub fn parse_table(text: &str) -> Result<Schedule, BoundsError> {
        let mut table = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| BoundsError::Parse { line: i + 1, message: message.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `k,d = N`"))?;
            let (k, d) = key.split_once(',').ok_or_else(|| err("expected `k,d` key"))?;
            let k: u64 = k.trim().parse().map_err(|_| err("bad k"))?;
            let d: u64 = d.trim().parse().map_err(|_| err("bad d"))?;
            let v: BigUint = value.trim().parse().map_err(|_| err("bad value"))?;
            if k == 0 || d == 0 || v.is_zero() {
                return Err(err("entries must be positive"));
            }
            table.insert((k, d), v);
        }
        Ok(Schedule::Table(table))
    }
}

/// `g(m) = (f(φ₁(m), 2φ₂(m)) + 1)^{m+1}`.
pub fn escape_schedule(m: u64, f: &Schedule) -> Result<BigUint, BoundsError> {
    if m == 0 {
        return Err(BoundsError::NonPositive);
    }
    let (i, d) = phi(m);
    let base = f.eval(i, 2 * u64::from(d))? + 1u32;
    Ok(base.pow((m + 1) as u32))
}

/// The stage cutoff `g: N⁺ → N⁺` used when assembling test families into a
/// single open set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EscapeSchedule {
    /// `g(m) = (f(φ₁(m), 2φ₂(m)) + 1)^{m+1}`.
    Paper(Schedule),
    /// `g(m) = m + offset`. Small enough that desk-scale depths meet
    /// nonempty constraint sets; the `2^{-m}` budget is then checked on the
    /// materialised sets instead of being implied.
    Compressed { offset: u64 },
}

impl EscapeSchedule {
    pub fn eval(&self, m: u64) -> Result<BigUint, BoundsError> {
        match self {
            EscapeSchedule::Paper(f) => escape_schedule(m, f),
            EscapeSchedule::Compressed { offset } => {
                if m == 0 {
                    return Err(BoundsError::NonPositive);
                }
                Ok(BigUint::from(m + offset))
            }
        }
    }

    pub fn is_paper(&self) -> bool {
        matches!(self, EscapeSchedule::Paper(_))
    }
}
