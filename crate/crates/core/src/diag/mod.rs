//! Constructive escape from open sets of measure below one.
//!
//! Given an enumerated open set `⟦S⟧` with `Λ(⟦S⟧) < 1`, the escape procedure
//! extends a prefix one coordinate at a time, always keeping the conditional
//! measure `F(t) = Λ(⟦S⟧ ∩ I(t))` strictly below the volume of the cell
//! `I(t)`. Because the children of a cell partition it, some child always
//! keeps the strict inequality, and no member of `S` can ever be a prefix of
//! the result.

mod assemble;
mod escape;
mod ggm_family;
mod open_set;

use thiserror::Error;

use crate::bounds::BoundsError;
use crate::ggm::ExperimentError;
use crate::measure::ExactRational;

pub use assemble::{assemble_open_set, AssembledOpenSet, AssemblyConfig, PieceReport, TestFamily};
pub use escape::{
    escape, escape_binary, escape_family, verify_escape, EscapeConfig, EscapeMode, EscapeStep,
    EscapeTranscript, StepWitness, FAMILY_DEPTH_CAP,
};
pub use ggm_family::{build_ggm_testfamily, toy_registry, GgmConstraintSet, GgmTestFamily};
pub use open_set::{
    conditional_measure_approx, conditional_measure_exact, EnumeratedOpenSet, FiniteOpenSet,
};

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("open set has measure {0}, not below 1")]
    MeasureNotBelowOne(ExactRational),
    #[error("exact mode needs a finite open set")]
    ExactNeedsFinite,
    #[error("depth {depth} exceeds the cap {cap}")]
    DepthTooLarge { depth: usize, cap: usize },
    #[error("no stage up to {cap} reaches the approximation for precision {precision}")]
    StageCapExceeded { precision: u32, cap: u64 },
    #[error("candidate {candidate} at depth {depth} undecided up to precision {precision}")]
    PrecisionExhausted { depth: usize, candidate: String, precision: u32 },
    #[error("no extension of {prefix} keeps the conditional measure below the cell volume")]
    NoExtension { prefix: String },
    #[error("schedule bound violated: {0}")]
    ScheduleBoundViolated(String),
    #[error("{what}: {count} items exceed the cap {cap}")]
    TooLarge { what: &'static str, count: String, cap: u64 },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}
