use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use super::{OracleTable, RomError};
use crate::measure::{ratio, BinaryString, ExactRational};

/// Largest block width the toy scheme enumerates.
pub const MAX_TOY_WIDTH: u32 = 3;

/// Source of `Prob[Sig-forge = 1]` for a fixed oracle table.
pub trait ExperimentOracle {
    fn name(&self) -> String;
    /// Query depth `q(n)`: the experiment only looks at `G` on `{0,1}^{≤q(n)}`.
    fn query_depth(&self, n: u64) -> u32;
    fn success(&self, n: u64, table: &OracleTable) -> Result<ExactRational, RomError>;
}

/// Reports the same probability for every table.
#[derive(Clone, Debug)]
pub struct ConstantOracle {
    pub value: ExactRational,
    pub depth: u32,
}

impl ConstantOracle {
    pub fn zero(depth: u32) -> Self {
        Self { value: ExactRational::zero(), depth }
    }

    pub fn one(depth: u32) -> Self {
        Self { value: ExactRational::one(), depth }
    }
}

impl ExperimentOracle for ConstantOracle {
    fn name(&self) -> String {
        format!("constant({})", self.value)
    }

    fn query_depth(&self, _n: u64) -> u32 {
        self.depth
    }

    fn success(&self, _n: u64, _table: &OracleTable) -> Result<ExactRational, RomError> {
        Ok(self.value.clone())
    }
}

/// Registered forgers against the toy scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adversary {
    /// Asks for a signature on `λ` and outputs it unchanged.
    Replay,
    /// Outputs a uniformly random signature on `λ` without querying.
    GuessFresh,
    /// Signs `λ`; if `G(λ) = G(0)` reuses that signature on `0`, otherwise guesses.
    Collision,
    /// Signs `λ` and always reuses the signature on `0`.
    CollisionOnly,
}

impl Adversary {
    pub const ALL: [Adversary; 4] = [Adversary::Replay, Adversary::GuessFresh, Adversary::Collision, Adversary::CollisionOnly];

    fn coins(self, width: u32) -> u32 {
        match self {
            Adversary::GuessFresh | Adversary::Collision => width,
            Adversary::Replay | Adversary::CollisionOnly => 0,
        }
    }
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adversary::Replay => "replay",
            Adversary::GuessFresh => "guess_fresh",
            Adversary::Collision => "collision",
            Adversary::CollisionOnly => "collision_only",
        })
    }
}

impl FromStr for Adversary {
    type Err = RomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Adversary::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| RomError::UnknownAdversary(s.to_string()))
    }
}

/// Signature of a message whose hash is `hash` under shift key `key`:
/// the preimage of `hash` under `s ↦ s + key mod 2^width`.
pub fn toy_sign(key: u64, hash: &BinaryString) -> BinaryString {
    let width = hash.len();
    let modulus = 1u64 << width;
    BinaryString::from_u64((hash.to_u64() + modulus - key % modulus) % modulus, width)
}

pub fn toy_verify(key: u64, hash: &BinaryString, signature: &BinaryString) -> bool {
    let width = hash.len();
    let modulus = 1u64 << width;
    signature.len() == width && (signature.to_u64() + key) % modulus == hash.to_u64()
}

/// Exact forging probability of `adversary` against the shift scheme with
/// oracle `table`, over uniform keys and coins.
pub fn sigforge_toy(table: &OracleTable, adversary: Adversary) -> Result<ExactRational, RomError> {
    let width = table.width();
    if width == 0 || width > MAX_TOY_WIDTH {
        return Err(RomError::ParameterOverflow(format!("toy scheme needs 1 ≤ ℓ ≤ {MAX_TOY_WIDTH}, got {width}")));
    }
    let needs_zero = matches!(adversary, Adversary::Collision | Adversary::CollisionOnly);
    if needs_zero && table.q() == 0 {
        return Err(RomError::ParameterOverflow(format!("adversary {adversary} needs q ≥ 1")));
    }
    let lambda = BinaryString::empty();
    let zero: BinaryString = BinaryString::from_bits(vec![false]);
    let hash = |m: &BinaryString| table.get(m).expect("message within the oracle domain").clone();
    let keys = 1u64 << width;
    let tapes = 1u64 << adversary.coins(width);
    let mut wins = 0i64;
    for key in 0..keys {
        for tape in 0..tapes {
            let guess = BinaryString::from_u64(tape, width as usize);
            let mut queried: Vec<BinaryString> = Vec::new();
            let mut sign = |m: &BinaryString| {
                queried.push(m.clone());
                toy_sign(key, &hash(m))
            };
            let (message, signature) = match adversary {
                Adversary::Replay => (lambda.clone(), sign(&lambda)),
                Adversary::GuessFresh => (lambda.clone(), guess),
                Adversary::Collision => {
                    let s = sign(&lambda);
                    if hash(&lambda) == hash(&zero) {
                        (zero.clone(), s)
                    } else {
                        (zero.clone(), guess)
                    }
                }
                Adversary::CollisionOnly => (zero.clone(), sign(&lambda)),
            };
            if !queried.contains(&message) && toy_verify(key, &hash(&message), &signature) {
                wins += 1;
            }
        }
    }
    Ok(ratio(wins, (keys * tapes) as i64))
}

/// The toy scheme as an experiment oracle with a fixed query depth.
#[derive(Clone, Copy, Debug)]
pub struct ToyFdhOracle {
    pub adversary: Adversary,
    pub depth: u32,
}

impl ExperimentOracle for ToyFdhOracle {
    fn name(&self) -> String {
        format!("toy_fdh({})", self.adversary)
    }

    fn query_depth(&self, _n: u64) -> u32 {
        self.depth
    }

    fn success(&self, _n: u64, table: &OracleTable) -> Result<ExactRational, RomError> {
        sigforge_toy(table, self.adversary)
    }
}
