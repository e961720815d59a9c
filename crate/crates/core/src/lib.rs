//! Exact-arithmetic machinery for instantiating random oracles and generic
//! groups by computable objects.
//!
//! The crate is organised bottom-up:
//!
//! * [`measure`]: exact rationals, finite binary strings, encoding functions
//!   and the Lebesgue outer measure of cylinder sets over `{0,1}^∞` and over
//!   families of encoding functions.
//! * [`bounds`]: counting and tail lemmas, pairing bijections and the
//!   hardness/escape schedules.
//! * [`ggm`]: a small generic-group virtual machine together with the
//!   discrete-logarithm and Diffie-Hellman experiments.
//! * [`rom`]: the random-oracle side; ℓ-function layout, constraint-string
//!   test sets and a toy full-domain-hash forging harness.
//! * [`diag`]: conditional measures, the approximation tower and the
//!   prefix-extension (escape) procedures.

pub mod bounds;
pub mod diag;
pub mod ggm;
pub mod measure;
pub mod rom;

pub use measure::{
    BinaryCylinderSet, BinaryString, CylinderSet, EncodingFunction, ExactRational,
    FamilyCylinderSet, FamilyPrefix, Prefix,
};
