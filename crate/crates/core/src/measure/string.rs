use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

/// A finite binary string. Ordered lexicographically with `0 < 1` and a
/// proper prefix before its extensions.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinaryString(Vec<bool>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid binary string {0:?}")]
pub struct ParseStringError(pub String);

impl BinaryString {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// The `width` low-order bits of `value`, most significant first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        Self((0..width).rev().map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &BinaryString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &BinaryString) -> BinaryString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> BinaryString {
        Self(self.0[start..end].to_vec())
    }

    pub fn with_bit(&self, bit: bool) -> BinaryString {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    /// Value of the bits read as a big-endian binary numeral (λ reads as 0).
    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Position of the string in the ordering λ, 0, 1, 00, 01, …, i.e. the
    /// numeral `1x` minus one.
    pub fn to_natural(&self) -> BigUint {
        let mut v = BigUint::one();
        for &b in &self.0 {
            v <<= 1usize;
            if b {
                v += 1u32;
            }
        }
        v - 1u32
    }

    /// Inverse of [`BinaryString::to_natural`].
    pub fn from_natural(n: &BigUint) -> BinaryString {
        let v = n + 1u32;
        let width = v.bits() as usize - 1;
        let bits = (0..width).rev().map(|i| v.bit(i as u64)).collect();
        Self(bits)
    }

    /// All strings of length at most `q` in the natural ordering.
    pub fn up_to_length(q: usize) -> impl Iterator<Item = BinaryString> {
        let count = (1u64 << (q + 1)) - 1;
        (0..count).map(|i| BinaryString::from_natural(&BigUint::from(i)))
    }

    pub fn count_up_to_length(q: usize) -> BigUint {
        (BigUint::one() << (q + 1)) - BigUint::one()
    }

    pub fn is_zero_string(&self) -> bool {
        self.0.iter().all(|b| !b)
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("λ");
        }
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BinaryString {
    type Err = ParseStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "λ" || s == "-" {
            return Ok(Self::empty());
        }
        if s.is_empty() {
            return Err(ParseStringError(s.to_string()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(ParseStringError(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}
