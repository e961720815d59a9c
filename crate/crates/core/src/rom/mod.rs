//! Random-oracle side: the identification of ℓ-functions with infinite binary
//! sequences, constraint-string test sets built from "bad" oracle tables, and
//! a toy full-domain-hash signature scheme used as an experiment oracle.
//!
//! The toy scheme's permutation is a cyclic shift of `{0,1}^ℓ`. It has no
//! security whatsoever; it only exercises the plumbing and measure identities.

mod constraint;
mod ell;
mod fdh;
mod table;

use thiserror::Error;

pub use constraint::{
    build_constraint_strings, build_rom_testfamily, rom_testset_measure, solovay_to_ml,
    ConstraintStringSet, RomTestFamily,
};
pub use ell::{embed_ell_function, extract_block, layout_position, EllPolynomial};
pub use fdh::{
    sigforge_toy, toy_sign, toy_verify, Adversary, ConstantOracle, ExperimentOracle, ToyFdhOracle,
    MAX_TOY_WIDTH,
};
pub use table::{parse_tables, write_tables, OracleTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RomError {
    #[error("ℓ has no coefficients")]
    EmptyPolynomial,
    #[error("ℓ({n}) = {value} is not positive")]
    EllNotPositive { n: u64, value: i128 },
    #[error("no block supplied for (n, j) = ({n}, {j})")]
    MissingBlock { n: u64, j: u64 },
    #[error("block for n = {n} has length {got}, expected {expected}")]
    BlockLength { n: u64, expected: u64, got: u64 },
    #[error("table has {got} entries, expected {expected} for query depth {q}")]
    TableSize { q: u32, expected: u64, got: u64 },
    #[error("bad-table count {count} exceeds the {total} possible tables")]
    BadCountOutOfRange { count: String, total: String },
    #[error("{what}: {count} items exceed the cap {cap}")]
    TooLarge { what: &'static str, count: String, cap: u64 },
    #[error("sequence of length {got} is shorter than the {needed} bits needed")]
    SequenceTooShort { needed: u64, got: u64 },
    #[error("horizon {k_max} precedes start index {n}")]
    HorizonBeforeStart { n: u64, k_max: u64 },
    #[error("exponent d = {0} must be at least 2")]
    InvalidExponent(u32),
    #[error("unknown adversary {0:?}")]
    UnknownAdversary(String),
    #[error("parameters out of the toy range: {0}")]
    ParameterOverflow(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
