use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, ToPrimitive};

use super::ell::{layout_position, EllPolynomial};
use super::fdh::ExperimentOracle;
use super::table::{domain_size, OracleTable};
use super::RomError;
use crate::measure::{dyadic, BinaryCylinderSet, BinaryString, ExactRational};

/// The test set built from a collection of oracle tables at parameter `n`:
/// every string of length `total_length` whose blocks for `(n, 0), …, (n, L)`
/// spell out one of the tables, with all other bits free.
///
/// Only the constrained bits are stored. The full strings number
/// `#tables · 2^{gap_bits}`, which is already `2^28` per table at `ℓ ≡ 1`,
/// `q = 2`, so they are produced on demand by [`ConstraintStringSet::materialize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintStringSet {
    n: u64,
    q: u32,
    block_width: u64,
    offsets: Vec<u64>,
    total_length: u64,
    patterns: BTreeSet<BinaryString>,
}

impl ConstraintStringSet {
    fn empty(n: u64, q: u32, ell: &EllPolynomial) -> Result<Self, RomError> {
        let block_width = ell.eval(n)?;
        let entries = domain_size(q);
        let offsets = (0..entries).map(|j| layout_position(n, j, ell)).collect::<Result<Vec<_>, _>>()?;
        let total_length = offsets.last().copied().unwrap_or(0) + block_width;
        Ok(Self { n, q, block_width, offsets, total_length, patterns: BTreeSet::new() })
    }

    fn insert(&mut self, table: &OracleTable) -> Result<(), RomError> {
        if table.q() != self.q {
            return Err(RomError::TableSize {
                q: self.q,
                expected: domain_size(self.q),
                got: table.values().len() as u64,
            });
        }
        if table.width() as u64 != self.block_width {
            return Err(RomError::BlockLength { n: self.n, expected: self.block_width, got: table.width() as u64 });
        }
        self.patterns.insert(table.pattern());
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn block_width(&self) -> u64 {
        self.block_width
    }

    /// Start offsets of the blocks for `j = 0, …, L`.
    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    /// Common length of every member string (they end with the last block).
    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    pub fn constrained_bits(&self) -> u64 {
        self.block_width * self.offsets.len() as u64
    }

    pub fn gap_bits(&self) -> u64 {
        self.total_length - self.constrained_bits()
    }

    pub fn table_count(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn tables(&self) -> Vec<OracleTable> {
        self.patterns
            .iter()
            .map(|p| OracleTable::from_pattern(self.n, self.q, self.block_width as u32, p).expect("stored pattern"))
            .collect()
    }

    /// Number of member strings, `#tables · 2^{gap_bits}`.
    pub fn string_count(&self) -> BigUint {
        BigUint::from(self.patterns.len()) << self.gap_bits()
    }

    /// Exact measure of the cylinder set. Gap bits are unconstrained, so the
    /// measure equals that of the constrained-bit patterns as binary strings.
    pub fn measure(&self) -> ExactRational {
        self.patterns.iter().cloned().collect::<BinaryCylinderSet>().measure()
    }

    /// Whether the sequence starting with `prefix` lies in the cylinder set;
    /// `prefix` must reach past the last block.
    pub fn contains_sequence(&self, prefix: &BinaryString) -> Result<bool, RomError> {
        if (prefix.len() as u64) < self.total_length {
            return Err(RomError::SequenceTooShort { needed: self.total_length, got: prefix.len() as u64 });
        }
        let w = self.block_width as usize;
        let mut pattern = BinaryString::empty();
        for &start in &self.offsets {
            pattern.extend_from(&prefix.slice(start as usize, start as usize + w));
        }
        Ok(self.patterns.contains(&pattern))
    }

    /// Lists every member string, refusing more than `cap` of them.
    pub fn materialize(&self, cap: u64) -> Result<BinaryCylinderSet, RomError> {
        let count = self.string_count();
        count.to_u64().filter(|c| *c <= cap).ok_or_else(|| RomError::TooLarge {
            what: "constraint strings",
            count: count.to_string(),
            cap,
        })?;
        let total = self.total_length as usize;
        let w = self.block_width as usize;
        // For each position: Some(index into the pattern) or None for a gap bit.
        let mut slot = vec![None; total];
        for (j, &start) in self.offsets.iter().enumerate() {
            for b in 0..w {
                slot[start as usize + b] = Some(j * w + b);
            }
        }
        let gaps = self.gap_bits();
        let mut out = BinaryCylinderSet::new();
        for pattern in &self.patterns {
            for fill in 0..1u64 << gaps {
                let mut gap_index = 0;
                let bits = slot
                    .iter()
                    .map(|s| match s {
                        Some(i) => pattern.bits()[*i],
                        None => {
                            gap_index += 1;
                            fill >> (gaps - gap_index) & 1 == 1
                        }
                    })
                    .collect();
                out.insert(BinaryString::from_bits(bits));
            }
        }
        Ok(out)
    }
}

/// The constraint-string set for the given bad tables at `(n, q)`.
pub fn build_constraint_strings(
    n: u64,
    q: u32,
    ell: &EllPolynomial,
    bad_tables: &[OracleTable],
) -> Result<ConstraintStringSet, RomError> {
    let mut set = ConstraintStringSet::empty(n, q, ell)?;
    for t in bad_tables {
        set.insert(t)?;
    }
    Ok(set)
}

/// Closed form `bad_count · 2^{−ℓ(n)·#{0,1}^{≤q}}`.
pub fn rom_testset_measure(n: u64, q: u32, ell: &EllPolynomial, bad_count: &BigUint) -> Result<ExactRational, RomError> {
    let bits = ell.eval(n)? * domain_size(q);
    let total = BigUint::one() << bits;
    if bad_count > &total {
        return Err(RomError::BadCountOutOfRange { count: bad_count.to_string(), total: total.to_string() });
    }
    Ok(dyadic(bad_count, bits))
}

/// Tables at parameter `n` on which `oracle` succeeds with probability above `1/n^d`.
pub fn build_rom_testfamily(
    oracle: &dyn ExperimentOracle,
    ell: &EllPolynomial,
    d: u32,
    n: u64,
    table_cap: u64,
) -> Result<ConstraintStringSet, RomError> {
    if d < 2 {
        return Err(RomError::InvalidExponent(d));
    }
    let q = oracle.query_depth(n);
    let width = ell.eval(n)?;
    let width = u32::try_from(width).map_err(|_| RomError::ParameterOverflow(format!("ℓ({n}) = {width}")))?;
    let threshold = ExactRational::new(BigInt::one(), BigInt::from(n).pow(d));
    let mut set = ConstraintStringSet::empty(n, q, ell)?;
    for table in OracleTable::all(n, q, width, table_cap)? {
        if oracle.success(n, &table)? > threshold {
            set.insert(&table)?;
        }
    }
    Ok(set)
}

/// A lazily evaluated family `n ↦ C_{A,d,n}`.
pub struct RomTestFamily<O: ExperimentOracle> {
    pub oracle: O,
    pub ell: EllPolynomial,
    pub d: u32,
    pub table_cap: u64,
}

impl<O: ExperimentOracle> RomTestFamily<O> {
    pub fn set(&self, n: u64) -> Result<ConstraintStringSet, RomError> {
        build_rom_testfamily(&self.oracle, &self.ell, self.d, n, self.table_cap)
    }
}

/// Truncation `⋃_{k=n}^{k_max} D_k` of the Martin-Löf component built from a
/// Solovay test, normalized to a prefix-free set.
pub fn solovay_to_ml<F>(mut family: F, n: u64, k_max: u64) -> Result<BinaryCylinderSet, RomError>
where
    F: FnMut(u64) -> BinaryCylinderSet,
{
    if k_max < n {
        return Err(RomError::HorizonBeforeStart { n, k_max });
    }
    let mut out = BinaryCylinderSet::new();
    for k in n..=k_max {
        out.extend(&family(k));
    }
    Ok(out.normalized())
}
