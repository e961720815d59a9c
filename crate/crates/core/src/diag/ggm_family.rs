use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, ToPrimitive};

use super::assemble::TestFamily;
use super::DiagError;
use crate::ggm::{dlog_success_for_sigma, label_echo_checked, n_bit_primes, ExperimentError, GenericProgram};
use crate::measure::{encf_count, EncodingFunction, ExactRational, FamilyCylinderSet, FamilyPrefix};

/// `C_{i,d,n}` for one program: all length-`n` families whose last entry
/// `σ_n` lets the program win the DLog experiment with probability above
/// `n^{−d}`. Earlier entries are unconstrained, so only the bad `σ_n` are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct GgmConstraintSet {
    n: u32,
    d: u32,
    bad_last: Vec<EncodingFunction>,
}

impl GgmConstraintSet {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn bad_encodings(&self) -> &[EncodingFunction] {
        &self.bad_last
    }

    pub fn is_empty(&self) -> bool {
        self.bad_last.is_empty()
    }

    /// `#bad / #Encf_n`: the cell volumes of the free earlier coordinates cancel.
    pub fn measure(&self) -> ExactRational {
        if self.n == 0 {
            return ExactRational::from_integer(BigInt::from(self.bad_last.len()));
        }
        ExactRational::new(BigInt::from(self.bad_last.len()), BigInt::from(encf_count(self.n)))
    }

    /// Number of prefixes in the materialised set.
    pub fn prefix_count(&self) -> BigUint {
        (1..self.n).map(encf_count).product::<BigUint>() * BigUint::from(self.bad_last.len())
    }

    pub fn contains(&self, prefix: &FamilyPrefix) -> bool {
        prefix.len() >= self.n as usize
            && self.n > 0
            && self.bad_last.contains(&prefix.entries()[self.n as usize - 1])
    }

    /// Lists `Encf_1 × … × Encf_{n−1} × bad`, refusing more than `cap` prefixes.
    pub fn materialize(&self, cap: u64) -> Result<FamilyCylinderSet, DiagError> {
        let count = self.prefix_count();
        count.to_u64().filter(|c| *c <= cap).ok_or_else(|| DiagError::TooLarge {
            what: "family prefixes",
            count: count.to_string(),
            cap,
        })?;
        let mut heads = vec![FamilyPrefix::empty()];
        for width in 1..self.n {
            let all: Vec<EncodingFunction> = EncodingFunction::all(width).collect();
            heads = heads
                .iter()
                .flat_map(|h| all.iter().map(move |e| h.extended(e.clone()).expect("width matches")))
                .collect();
        }
        let mut out = FamilyCylinderSet::new();
        for h in &heads {
            for last in &self.bad_last {
                out.insert(h.extended(last.clone()).expect("width matches"));
            }
        }
        Ok(out)
    }
}

/// Exhaustively classifies every `σ ∈ Encf_n` by the program's DLog success.
pub fn build_ggm_testfamily(prog: &GenericProgram, d: u32, n: u32, cap: u32) -> Result<GgmConstraintSet, DiagError> {
    if n > cap {
        return Err(ExperimentError::CapExceeded { n, cap }.into());
    }
    let mut bad_last = Vec::new();
    // Without an n-bit prime the experiment never succeeds.
    if !n_bit_primes(n).is_empty() {
        let threshold = ExactRational::new(BigInt::one(), BigInt::from(n).pow(d));
        for sigma in EncodingFunction::all(n) {
            if dlog_success_for_sigma(prog, n, &sigma)? > threshold {
                bad_last.push(sigma);
            }
        }
    }
    Ok(GgmConstraintSet { n, d, bad_last })
}

/// Programs used by the end-to-end pipeline. Both succeed only for encodings
/// that label small multiples of the generator with their own numerals, so
/// their constraint sets are nonempty but small.
pub fn toy_registry() -> Vec<GenericProgram> {
    vec![label_echo_checked(2).program, label_echo_checked(3).program]
}

/// The DLog test family over a finite program registry.
pub struct GgmTestFamily {
    programs: Vec<GenericProgram>,
    horizon: u32,
    materialize_cap: u64,
    cache: RefCell<HashMap<(u64, u32, u64), FamilyCylinderSet>>,
}

impl GgmTestFamily {
    pub fn new(programs: Vec<GenericProgram>, horizon: u32) -> Self {
        Self { programs, horizon, materialize_cap: 4_000_000, cache: RefCell::new(HashMap::new()) }
    }

    pub fn with_materialize_cap(mut self, cap: u64) -> Self {
        self.materialize_cap = cap;
        self
    }

    pub fn programs(&self) -> &[GenericProgram] {
        &self.programs
    }
}

impl TestFamily<FamilyPrefix> for GgmTestFamily {
    fn registry_size(&self) -> u64 {
        self.programs.len() as u64
    }

    fn horizon(&self) -> u64 {
        self.horizon as u64
    }

    fn constraint_set(&self, i: u64, d: u32, n: u64) -> Result<FamilyCylinderSet, DiagError> {
        if i == 0 || i > self.registry_size() || n > self.horizon as u64 {
            return Ok(FamilyCylinderSet::new());
        }
        if let Some(set) = self.cache.borrow().get(&(i, d, n)) {
            return Ok(set.clone());
        }
        let program = &self.programs[i as usize - 1];
        let set = build_ggm_testfamily(program, d, n as u32, self.horizon)?.materialize(self.materialize_cap)?;
        self.cache.borrow_mut().insert((i, d, n), set.clone());
        Ok(set)
    }
}
