use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::program::{GenericProgram, ProgramError};
use super::vm::{run_with_oracle, GroupOracle, Output, VmError};
use crate::measure::{to_f64, EncodingFunction, ExactRational};

/// Largest encoding width enumerated exhaustively unless the caller raises it.
pub const DEFAULT_EXHAUSTIVE_CAP: u32 = 3;
const MAX_COINS: u32 = 20;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("there is no {0}-bit prime")]
    NoPrimes(u32),
    #[error("exhaustive enumeration at n = {n} exceeds the cap {cap}")]
    CapExceeded { n: u32, cap: u32 },
    #[error("modulus {modulus} must lie in [2, 2^{n} - 1]")]
    ModulusOutOfRange { n: u32, modulus: u64 },
    #[error("program declares {0} coins; at most {MAX_COINS} can be enumerated")]
    TooManyCoins(u32),
    #[error("sampled mode needs at least one sample")]
    NoSamples,
    #[error("no programs to audit")]
    EmptyPrograms,
    #[error("empty audit grid")]
    EmptyGrid,
    #[error("program {0} makes no oracle queries; the bound C·m²/p is degenerate")]
    ZeroQueries(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Vm(#[from] VmError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// Average over every encoding of width `n`; refused when `n > cap`.
    Exhaustive { cap: u32 },
    /// Average over `samples` encodings drawn with a seeded generator.
    Sampled { seed: u64, samples: u64 },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Exhaustive { cap: DEFAULT_EXHAUSTIVE_CAP }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Trials {
    Exhaustive { encodings: u64 },
    Sampled { seed: u64, samples: u64, std_error: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub success_probability: ExactRational,
    /// Largest oracle-call count seen on any executed path.
    pub max_queries: u64,
    pub trials: Trials,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShoupAudit {
    pub success: ExactRational,
    pub max_queries: u64,
    pub largest_prime: u64,
    pub bound: ExactRational,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    DLog,
    Cdh,
}

fn is_prime(v: u64) -> bool {
    v >= 2 && (2..).take_while(|d| d * d <= v).all(|d| v % d != 0)
}

/// Primes in `[2^{n-1}, 2^n)`.
pub fn n_bit_primes(n: u32) -> Vec<u64> {
    if n == 0 || n > 40 {
        return Vec::new();
    }
    ((1u64 << (n - 1))..(1u64 << n)).filter(|&v| is_prime(v)).collect()
}

pub fn largest_prime_divisor(mut value: u64) -> Option<u64> {
    let mut largest = None;
    let mut d = 2;
    while d * d <= value {
        while value % d == 0 {
            largest = Some(d);
            value /= d;
        }
        d += 1;
    }
    if value > 1 {
        largest = Some(value);
    }
    largest
}

/// Exact success over uniform secrets in `Z_N` and all coin tapes, with the oracle fixed.
fn fixed_oracle_success(
    kind: Kind,
    prog: &GenericProgram,
    oracle: &GroupOracle,
) -> Result<(ExactRational, u64), ExperimentError> {
    if prog.coins > MAX_COINS {
        return Err(ExperimentError::TooManyCoins(prog.coins));
    }
    let modulus = oracle.modulus();
    let tapes = 1u64 << prog.coins;
    let mut coins = vec![false; prog.coins as usize];
    let mut hits = 0u64;
    let mut max_queries = 0;
    let secrets: Box<dyn Iterator<Item = (u64, u64)>> = match kind {
        Kind::DLog => Box::new((0..modulus).map(|x| (x, 0))),
        Kind::Cdh => Box::new((0..modulus).flat_map(move |x| (0..modulus).map(move |y| (x, y)))),
    };
    let mut cases = 0u64;
    for (x, y) in secrets {
        cases += 1;
        let inputs = match kind {
            Kind::DLog => vec![1 % modulus, x],
            Kind::Cdh => vec![1 % modulus, x, y],
        };
        let target = match kind {
            Kind::DLog => Output::Int(x),
            Kind::Cdh => Output::Bits(oracle.to_bits(oracle.encode(x * y % modulus))),
        };
        for tape in 0..tapes {
            for (i, c) in coins.iter_mut().enumerate() {
                *c = tape >> i & 1 == 1;
            }
            let run = run_with_oracle(prog, oracle, &inputs, &coins)?;
            max_queries = max_queries.max(run.queries);
            if run.output == target {
                hits += 1;
            }
        }
    }
    let total = BigInt::from(cases) * BigInt::from(tapes);
    Ok((ExactRational::new(BigInt::from(hits), total), max_queries))
}

fn per_sigma(kind: Kind, prog: &GenericProgram, n: u32, sigma: &EncodingFunction) -> Result<(ExactRational, u64), ExperimentError> {
    let primes = n_bit_primes(n);
    if primes.is_empty() {
        return Err(ExperimentError::NoPrimes(n));
    }
    let mut sum = ExactRational::zero();
    let mut max_queries = 0;
    for &p in &primes {
        let oracle = GroupOracle::new(sigma, p)?;
        let (s, q) = fixed_oracle_success(kind, prog, &oracle)?;
        sum += s;
        max_queries = max_queries.max(q);
    }
    Ok((sum / ExactRational::from_integer(BigInt::from(primes.len())), max_queries))
}

/// Probability that `prog(p; σ(1), σ(x))` outputs `x`, averaged over `n`-bit
/// primes `p`, `x ∈ Z_p` and coins.
pub fn dlog_success_for_sigma(prog: &GenericProgram, n: u32, sigma: &EncodingFunction) -> Result<ExactRational, ExperimentError> {
    prog.validate()?;
    Ok(per_sigma(Kind::DLog, prog, n, sigma)?.0)
}

/// Probability that `prog(p; σ(1), σ(x), σ(y))` outputs the string `σ(xy)`.
pub fn cdh_success_for_sigma(prog: &GenericProgram, n: u32, sigma: &EncodingFunction) -> Result<ExactRational, ExperimentError> {
    prog.validate()?;
    Ok(per_sigma(Kind::Cdh, prog, n, sigma)?.0)
}

/// DLog success with the group order fixed to `modulus` and `σ` fixed.
pub fn dlog_success_fixed_modulus(
    prog: &GenericProgram,
    modulus: u64,
    sigma: &EncodingFunction,
) -> Result<(ExactRational, u64), ExperimentError> {
    prog.validate()?;
    fixed_oracle_success(Kind::DLog, prog, &GroupOracle::new(sigma, modulus)?)
}

/// CDH success with the group order fixed to `modulus` and `σ` fixed.
pub fn cdh_success_fixed_modulus(
    prog: &GenericProgram,
    modulus: u64,
    sigma: &EncodingFunction,
) -> Result<(ExactRational, u64), ExperimentError> {
    prog.validate()?;
    fixed_oracle_success(Kind::Cdh, prog, &GroupOracle::new(sigma, modulus)?)
}

fn over_encodings(
    kind: Kind,
    prog: &GenericProgram,
    n: u32,
    mode: Mode,
) -> Result<ExperimentResult, ExperimentError> {
    prog.validate()?;
    if n_bit_primes(n).is_empty() {
        return Err(ExperimentError::NoPrimes(n));
    }
    match mode {
        Mode::Exhaustive { cap } => {
            if n > cap {
                return Err(ExperimentError::CapExceeded { n, cap });
            }
            let mut sum = ExactRational::zero();
            let mut count = 0u64;
            let mut max_queries = 0;
            for sigma in EncodingFunction::all(n) {
                let (s, q) = per_sigma(kind, prog, n, &sigma)?;
                sum += s;
                count += 1;
                max_queries = max_queries.max(q);
            }
            Ok(ExperimentResult {
                success_probability: sum / ExactRational::from_integer(BigInt::from(count)),
                max_queries,
                trials: Trials::Exhaustive { encodings: count },
            })
        }
        Mode::Sampled { seed, samples } => {
            if samples == 0 {
                return Err(ExperimentError::NoSamples);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut table: Vec<u32> = (0..1u32 << n).collect();
            let mut sum = ExactRational::zero();
            let mut values = Vec::with_capacity(samples as usize);
            let mut max_queries = 0;
            for _ in 0..samples {
                table.shuffle(&mut rng);
                let sigma = EncodingFunction::new(n, table.clone()).expect("shuffled identity is a bijection");
                let (s, q) = per_sigma(kind, prog, n, &sigma)?;
                values.push(to_f64(&s));
                sum += s;
                max_queries = max_queries.max(q);
            }
            let k = samples as f64;
            let mean = values.iter().sum::<f64>() / k;
            let variance = if samples > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            Ok(ExperimentResult {
                success_probability: sum / ExactRational::from_integer(BigInt::from(samples)),
                max_queries,
                trials: Trials::Sampled { seed, samples, std_error: (variance / k).sqrt() },
            })
        }
    }
}

/// DLog success averaged over encodings of width `n`.
pub fn dlog_success_ggm(prog: &GenericProgram, n: u32, mode: Mode) -> Result<ExperimentResult, ExperimentError> {
    over_encodings(Kind::DLog, prog, n, mode)
}

/// CDH success averaged over encodings of width `n`.
pub fn cdh_success_ggm(prog: &GenericProgram, n: u32, mode: Mode) -> Result<ExperimentResult, ExperimentError> {
    over_encodings(Kind::Cdh, prog, n, mode)
}

/// Exact DLog success for fixed group order `modulus` over all encodings of
/// width `n`, compared against `constant · m² / p` where `p` is the largest
/// prime divisor of `modulus`.
pub fn shoup_audit(
    prog: &GenericProgram,
    n: u32,
    modulus: u64,
    constant: &ExactRational,
    cap: u32,
) -> Result<ShoupAudit, ExperimentError> {
    prog.validate()?;
    if modulus < 2 || n >= 64 || modulus > (1u64 << n) - 1 {
        return Err(ExperimentError::ModulusOutOfRange { n, modulus });
    }
    if n > cap {
        return Err(ExperimentError::CapExceeded { n, cap });
    }
    let mut sum = ExactRational::zero();
    let mut count = 0u64;
    let mut max_queries = 0;
    for sigma in EncodingFunction::all(n) {
        let (s, q) = fixed_oracle_success(Kind::DLog, prog, &GroupOracle::new(&sigma, modulus)?)?;
        sum += s;
        count += 1;
        max_queries = max_queries.max(q);
    }
    let success = sum / ExactRational::from_integer(BigInt::from(count));
    let largest_prime = largest_prime_divisor(modulus).expect("modulus >= 2");
    let bound = constant * ExactRational::from_integer(BigInt::from(max_queries).pow(2))
        / ExactRational::from_integer(BigInt::from(largest_prime));
    let holds = success <= bound;
    Ok(ShoupAudit { success, max_queries, largest_prime, bound, holds })
}

/// Smallest `C` with `success ≤ C · m² / p` over every program and every
/// `(n, N)` pair of the grid.
pub fn minimal_shoup_constant(
    progs: &[GenericProgram],
    grid: &[(u32, u64)],
    cap: u32,
) -> Result<ExactRational, ExperimentError> {
    if progs.is_empty() {
        return Err(ExperimentError::EmptyPrograms);
    }
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let mut best = ExactRational::zero();
    for prog in progs {
        for &(n, modulus) in grid {
            let audit = shoup_audit(prog, n, modulus, &ExactRational::one(), cap)?;
            if audit.max_queries == 0 {
                return Err(ExperimentError::ZeroQueries(prog.name.clone()));
            }
            let needed = audit.success * ExactRational::from_integer(BigInt::from(audit.largest_prime))
                / ExactRational::from_integer(BigInt::from(audit.max_queries).pow(2));
            if needed > best {
                best = needed;
            }
        }
    }
    Ok(best)
}
