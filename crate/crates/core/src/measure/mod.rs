//! Exact rational arithmetic and Lebesgue outer measure on cylinder sets.

mod cylinder;
mod encoding;
mod family;
mod rational;
mod string;
pub mod text;

pub use cylinder::{
    monotonicity_check, subadditivity_check, BinaryCylinderSet, CylinderSet, FamilyCylinderSet,
    Prefix,
};
pub use encoding::{encf_count, EncodingFunction, EncodingError, Permutations};
pub use family::FamilyPrefix;
pub use rational::{dyadic, pow2_neg, ratio, to_f64, ExactRational};
pub use string::{BinaryString, ParseStringError};
