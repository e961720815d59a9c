//! Generic-group virtual machine and the discrete-logarithm / Diffie-Hellman
//! experiments over encoding functions.
//!
//! Programs hold only handles produced by the group oracle (encodings of
//! elements of `Z_N`). They may compare handles, branch on the bits of a
//! handle, flip coins from an explicit finite tape, and output either an
//! integer or a bit string. Arithmetic on group elements goes through the
//! `add`/`inv` oracle, and every such call is counted.

mod experiment;
mod program;
mod registry;
mod vm;

pub use experiment::{
    cdh_success_fixed_modulus, cdh_success_for_sigma, cdh_success_ggm, dlog_success_fixed_modulus,
    dlog_success_for_sigma, dlog_success_ggm, largest_prime_divisor, minimal_shoup_constant,
    n_bit_primes, shoup_audit, ExperimentError, ExperimentResult, Mode, ShoupAudit, Trials,
    DEFAULT_EXHAUSTIVE_CAP,
};
pub use program::{AsmError, GenericProgram, Instr, IntExpr, ProgramError, Reg};
pub use registry::{
    bsgs, builtin, const_guess, const_guess_dummy, const_string, echo_x, invalid_guess,
    label_echo_checked, linear_search, random_guess, Builtin, RegistryError, BUILTIN_NAMES,
};
pub use vm::{run_generic, Execution, GroupOracle, Handle, Output, VmError};
