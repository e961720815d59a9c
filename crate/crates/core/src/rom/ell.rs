use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::RomError;
use crate::bounds::cantor_unpair;
use crate::measure::BinaryString;

/// Range on which positivity is checked at construction.
const CHECK_RANGE: u64 = 1000;

/// The block-length polynomial `ℓ(n) = c_0 + c_1 n + c_2 n² + …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EllPolynomial {
    coefficients: Vec<i64>,
}

impl EllPolynomial {
    /// Requires `ℓ(n) > 0` for `1 ≤ n ≤ 1000` and `ℓ(0) ≥ 0`.
    pub fn new(coefficients: Vec<i64>) -> Result<Self, RomError> {
        if coefficients.is_empty() {
            return Err(RomError::EmptyPolynomial);
        }
        let poly = Self { coefficients };
        let zero = poly.raw(0);
        if zero < 0 {
            return Err(RomError::EllNotPositive { n: 0, value: zero });
        }
        for n in 1..=CHECK_RANGE {
            let value = poly.raw(n);
            if value <= 0 {
                return Err(RomError::EllNotPositive { n, value });
            }
        }
        Ok(poly)
    }

    pub fn constant(value: u32) -> Self {
        Self::new(vec![value as i64]).expect("constant must be positive")
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    fn raw(&self, n: u64) -> i128 {
        self.coefficients
            .iter()
            .rev()
            .fold(0i128, |acc, &c| acc.saturating_mul(n as i128).saturating_add(c as i128))
    }

    pub fn eval(&self, n: u64) -> Result<u64, RomError> {
        let value = self.raw(n);
        if value < 0 || (n > 0 && value == 0) || value > u64::MAX as i128 {
            return Err(RomError::EllNotPositive { n, value });
        }
        Ok(value as u64)
    }
}

impl FromStr for EllPolynomial {
    type Err = RomError;

    /// Comma-separated coefficients, constant term first: `1,1` is `n + 1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coefficients = s
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| RomError::Parse { line: 1, message: e.to_string() })?;
        Self::new(coefficients)
    }
}

impl fmt::Display for EllPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coefficients.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Offset in the flattened sequence `H(b(0)) H(b(1)) …` at which the block
/// for `(n, j)` starts, that is `Σ_{k < c(n,j)} ℓ(b₁(k))` with `c` the Cantor
/// pairing. The block occupies `ℓ(n)` bits from there.
pub fn layout_position(n: u64, j: u64, ell: &EllPolynomial) -> Result<u64, RomError> {
    // Indices below c(n, j) are the full diagonals s < n + j plus the first j
    // entries of diagonal n + j, whose first components run from n + j down to n + 1.
    let diag = n + j;
    let mut prefix = Vec::with_capacity(diag as usize + 1);
    let mut running = 0u128;
    for a in 0..=diag {
        running += ell.eval(a)? as u128;
        prefix.push(running);
    }
    let full: u128 = prefix[..diag as usize].iter().sum();
    let partial = prefix[diag as usize] - prefix[n as usize];
    let total = full + partial;
    u64::try_from(total).map_err(|_| RomError::ParameterOverflow(format!("layout offset for ({n}, {j})")))
}

/// Concatenates the blocks for `b(0), …, b(depth − 1)`.
pub fn embed_ell_function(
    values: &BTreeMap<(u64, u64), BinaryString>,
    depth: u64,
    ell: &EllPolynomial,
) -> Result<BinaryString, RomError> {
    let mut out = BinaryString::empty();
    for k in 0..depth {
        let (n, j) = cantor_unpair(k);
        let block = values.get(&(n, j)).ok_or(RomError::MissingBlock { n, j })?;
        let expected = ell.eval(n)?;
        if block.len() as u64 != expected {
            return Err(RomError::BlockLength { n, expected, got: block.len() as u64 });
        }
        out.extend_from(block);
    }
    Ok(out)
}

/// Reads the block for `(n, j)` back out of a flattened sequence.
pub fn extract_block(flat: &BinaryString, n: u64, j: u64, ell: &EllPolynomial) -> Result<BinaryString, RomError> {
    let start = layout_position(n, j, ell)?;
    let end = start + ell.eval(n)?;
    if (flat.len() as u64) < end {
        return Err(RomError::SequenceTooShort { needed: end, got: flat.len() as u64 });
    }
    Ok(flat.slice(start as usize, end as usize))
}
