use thiserror::Error;

use super::program::{GenericProgram, Instr, IntExpr};
use crate::measure::{BinaryString, EncodingFunction};

/// An encoding handed out by the oracle, stored as its numeral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Handle(pub u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Output {
    Int(u64),
    Bits(BinaryString),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub output: Output,
    /// Number of `add`/`inv` oracle calls.
    pub queries: u64,
    pub steps: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VmError {
    #[error("modulus {modulus} does not fit encodings of width {width}")]
    ModulusOutOfRange { modulus: u64, width: u32 },
    #[error("input {value} is not in Z_{modulus}")]
    InputOutOfRange { value: u64, modulus: u64 },
    #[error("instruction {pc}: input index {index} not supplied")]
    MissingInput { pc: usize, index: usize },
    #[error("string {0:?} is not the encoding of an element of the group")]
    ForeignString(u32),
    #[error("instruction {pc}: register r{reg} read before being written")]
    UnwrittenRegister { pc: usize, reg: u16 },
    #[error("instruction {pc}: register r{reg} out of range")]
    RegisterOutOfRange { pc: usize, reg: u16 },
    #[error("coin tape exhausted at instruction {pc}")]
    CoinsExhausted { pc: usize },
    #[error("step bound {0} exceeded")]
    StepBoundExceeded(u64),
    #[error("control fell off the end of the program")]
    FellOffEnd,
}

/// The `add`/`inv` oracle for a fixed encoding and group order.
#[derive(Clone, Debug)]
pub struct GroupOracle {
    table: Vec<u32>,
    inverse: Vec<u32>,
    modulus: u64,
    width: u32,
}

impl GroupOracle {
    pub fn new(sigma: &EncodingFunction, modulus: u64) -> Result<Self, VmError> {
        if modulus == 0 || modulus > sigma.domain_size() as u64 {
            return Err(VmError::ModulusOutOfRange { modulus, width: sigma.width() });
        }
        Ok(Self {
            table: sigma.table().to_vec(),
            inverse: sigma.inverse_table(),
            modulus,
            width: sigma.width(),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn encode(&self, x: u64) -> Handle {
        Handle(self.table[(x % self.modulus) as usize])
    }

    /// Recovers the group element behind a handle; fails for strings outside `σ(Z_N)`.
    pub fn decode(&self, h: Handle) -> Result<u64, VmError> {
        let x = *self.inverse.get(h.0 as usize).ok_or(VmError::ForeignString(h.0))? as u64;
        if x < self.modulus {
            Ok(x)
        } else {
            Err(VmError::ForeignString(h.0))
        }
    }

    pub fn add(&self, a: Handle, b: Handle) -> Result<Handle, VmError> {
        Ok(self.encode((self.decode(a)? + self.decode(b)?) % self.modulus))
    }

    pub fn inv(&self, a: Handle) -> Result<Handle, VmError> {
        let x = self.decode(a)?;
        Ok(self.encode((self.modulus - x) % self.modulus))
    }

    pub fn to_bits(&self, h: Handle) -> BinaryString {
        BinaryString::from_u64(h.0 as u64, self.width as usize)
    }
}

/// Runs `prog` on `σ(inputs)` in `Z_modulus` with the given coin tape.
pub fn run_generic(
    prog: &GenericProgram,
    modulus: u64,
    sigma: &EncodingFunction,
    inputs: &[u64],
    coins: &[bool],
) -> Result<Execution, VmError> {
    let oracle = GroupOracle::new(sigma, modulus)?;
    run_with_oracle(prog, &oracle, inputs, coins)
}

pub(crate) fn run_with_oracle(
    prog: &GenericProgram,
    oracle: &GroupOracle,
    inputs: &[u64],
    coins: &[bool],
) -> Result<Execution, VmError> {
    let modulus = oracle.modulus();
    if let Some(&value) = inputs.iter().find(|&&v| v >= modulus) {
        return Err(VmError::InputOutOfRange { value, modulus });
    }
    let handles: Vec<Handle> = inputs.iter().map(|&x| oracle.encode(x)).collect();
    let mut regs: Vec<Option<Handle>> = vec![None; prog.registers];
    let mut pc = 0usize;
    let mut coin_pos = 0usize;
    let mut queries = 0u64;
    let mut steps = 0u64;

    let read = |regs: &[Option<Handle>], pc: usize, reg: u16| -> Result<Handle, VmError> {
        regs.get(reg as usize)
            .ok_or(VmError::RegisterOutOfRange { pc, reg })?
            .ok_or(VmError::UnwrittenRegister { pc, reg })
    };
    let write = |regs: &mut [Option<Handle>], pc: usize, reg: u16, h: Handle| -> Result<(), VmError> {
        *regs.get_mut(reg as usize).ok_or(VmError::RegisterOutOfRange { pc, reg })? = Some(h);
        Ok(())
    };

    loop {
        let ins = prog.instructions.get(pc).ok_or(VmError::FellOffEnd)?;
        steps += 1;
        if steps > prog.step_bound {
            return Err(VmError::StepBoundExceeded(prog.step_bound));
        }
        let mut next = pc + 1;
        match ins {
            Instr::LoadInput { dst, input } => {
                let h = *handles.get(*input).ok_or(VmError::MissingInput { pc, index: *input })?;
                write(&mut regs, pc, *dst, h)?;
            }
            Instr::Add { dst, a, b } => {
                let h = oracle.add(read(&regs, pc, *a)?, read(&regs, pc, *b)?)?;
                queries += 1;
                write(&mut regs, pc, *dst, h)?;
            }
            Instr::Inv { dst, a } => {
                let h = oracle.inv(read(&regs, pc, *a)?)?;
                queries += 1;
                write(&mut regs, pc, *dst, h)?;
            }
            Instr::ConstElem { dst, value } => {
                let base = *handles.first().ok_or(VmError::MissingInput { pc, index: 0 })?;
                let (h, calls) = scalar_multiple(oracle, base, *value % modulus)?;
                queries += calls;
                write(&mut regs, pc, *dst, h)?;
            }
            Instr::EqBranch { a, b, target } => {
                if read(&regs, pc, *a)? == read(&regs, pc, *b)? {
                    next = *target;
                }
            }
            Instr::LabelBranch { a, label, target } => {
                if read(&regs, pc, *a)?.0 as u64 == *label {
                    next = *target;
                }
            }
            Instr::CoinBranch { target } => {
                let bit = *coins.get(coin_pos).ok_or(VmError::CoinsExhausted { pc })?;
                coin_pos += 1;
                if bit {
                    next = *target;
                }
            }
            Instr::Jump { target } => next = *target,
            Instr::OutputInt(expr) => {
                let value = match expr {
                    IntExpr::Const(c) => *c,
                    IntExpr::ConstModN(c) => c % modulus,
                    IntExpr::Modulus => modulus,
                    IntExpr::Label(r) => read(&regs, pc, *r)?.0 as u64,
                };
                return Ok(Execution { output: Output::Int(value), queries, steps });
            }
            Instr::OutputReg(r) => {
                let bits = oracle.to_bits(read(&regs, pc, *r)?);
                return Ok(Execution { output: Output::Bits(bits), queries, steps });
            }
            Instr::OutputStr(bits) => {
                return Ok(Execution { output: Output::Bits(bits.clone()), queries, steps });
            }
        }
        pc = next;
    }
}

/// `value · base` by double-and-add; `0 · base` is `base + inv(base)`.
fn scalar_multiple(oracle: &GroupOracle, base: Handle, value: u64) -> Result<(Handle, u64), VmError> {
    if value == 0 {
        let neg = oracle.inv(base)?;
        return Ok((oracle.add(base, neg)?, 2));
    }
    let mut acc = base;
    let mut calls = 0;
    for bit in (0..63 - value.leading_zeros()).rev() {
        acc = oracle.add(acc, acc)?;
        calls += 1;
        if value >> bit & 1 == 1 {
            acc = oracle.add(acc, base)?;
            calls += 1;
        }
    }
    Ok((acc, calls))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma3() -> EncodingFunction {
        EncodingFunction::new(3, vec![5, 2, 7, 0, 1, 6, 3, 4]).unwrap()
    }

    #[test]
    fn oracle_is_sound_exhaustively_for_small_widths() {
        for width in 1..=3u32 {
            for sigma in EncodingFunction::all(width) {
                for modulus in 1..=(1u64 << width) {
                    let oracle = GroupOracle::new(&sigma, modulus).unwrap();
                    for x in 0..modulus {
                        let neg = oracle.inv(oracle.encode(x)).unwrap();
                        assert_eq!(neg, oracle.encode((modulus - x) % modulus));
                        for y in 0..modulus {
                            let sum = oracle.add(oracle.encode(x), oracle.encode(y)).unwrap();
                            assert_eq!(sum, oracle.encode((x + y) % modulus));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_programs() {
        let out0 = GenericProgram::parse("out_int 0\n").unwrap();
        let e = run_generic(&out0, 5, &sigma3(), &[1, 3], &[]).unwrap();
        assert_eq!((e.output, e.queries), (Output::Int(0), 0));

        let double = GenericProgram::parse("load r0 1\nadd r1 r0 r0\nout_reg r1\n").unwrap();
        let e = run_generic(&double, 5, &sigma3(), &[1, 3], &[]).unwrap();
        assert_eq!(e.output, Output::Bits(sigma3().encode(1)));
        assert_eq!(e.queries, 1);
    }

    #[test]
    fn foreign_strings_are_rejected() {
        let oracle = GroupOracle::new(&sigma3(), 5).unwrap();
        // sigma3 maps 5 -> 6, which is outside σ(Z_5).
        assert_eq!(oracle.decode(Handle(6)), Err(VmError::ForeignString(6)));
        assert!(oracle.add(Handle(6), Handle(5)).is_err());
        assert!(GroupOracle::new(&sigma3(), 9).is_err());
    }

    #[test]
    fn dynamic_errors() {
        let sigma = sigma3();
        let coin = GenericProgram::parse(".coins 1\ncoin a\ncoin a\na: out_int 0\n").unwrap();
        assert!(matches!(run_generic(&coin, 5, &sigma, &[1], &[false]), Err(VmError::CoinsExhausted { .. })));
        let spin = GenericProgram::parse(".steps 50\nl: jmp l\n").unwrap();
        assert_eq!(run_generic(&spin, 5, &sigma, &[1], &[]), Err(VmError::StepBoundExceeded(50)));
        let bad_input = GenericProgram::parse("out_int 0\n").unwrap();
        assert!(matches!(run_generic(&bad_input, 5, &sigma, &[7], &[]), Err(VmError::InputOutOfRange { .. })));
    }

    #[test]
    fn const_elem_uses_double_and_add() {
        let sigma = sigma3();
        let oracle = GroupOracle::new(&sigma, 7).unwrap();
        for value in 0..20u64 {
            let (h, calls) = scalar_multiple(&oracle, oracle.encode(1), value % 7).unwrap();
            assert_eq!(h, oracle.encode(value % 7));
            let v = value % 7;
            let expected = match v {
                0 => 2,
                _ => (63 - v.leading_zeros() as u64) + v.count_ones() as u64 - 1,
            };
            assert_eq!(calls, expected);
        }
    }
}
