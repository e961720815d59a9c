//! Built-in programs with known success profiles.

use thiserror::Error;

use super::program::{GenericProgram, Instr, IntExpr, Reg};
use crate::measure::BinaryString;

/// Name patterns accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "const_guess(c)",
    "const_guess_dummy(c)",
    "invalid_guess",
    "random_guess(b)",
    "linear_search(m)",
    "bsgs(m)",
    "echo_x",
    "const_string(bits)",
    "label_echo",
    "label_echo_checked(k)",
];

const MAX_RANDOM_BITS: u64 = 16;
const MAX_SEARCH: u64 = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown built-in program {0:?}")]
    Unknown(String),
    #[error("built-in {name}: bad argument {arg:?}")]
    BadArgument { name: String, arg: String },
}

/// A built-in program together with the number of oracle calls it makes on
/// its longest path.
#[derive(Clone, Debug)]
pub struct Builtin {
    pub program: GenericProgram,
    pub query_bound: u64,
}

/// Looks up a built-in by name, e.g. `linear_search(3)` or `const_string(01)`.
pub fn builtin(spec: &str) -> Result<Builtin, RegistryError> {
    let spec = spec.trim();
    let (name, arg) = match spec.split_once('(') {
        Some((name, rest)) => {
            let arg = rest.strip_suffix(')').ok_or_else(|| RegistryError::Unknown(spec.to_string()))?;
            (name, Some(arg.trim()))
        }
        None => (spec, None),
    };
    let bad = || RegistryError::BadArgument { name: name.to_string(), arg: arg.unwrap_or("").to_string() };
    let number = |max: u64| -> Result<u64, RegistryError> {
        arg.and_then(|a| a.parse::<u64>().ok()).filter(|v| *v <= max).ok_or_else(bad)
    };
    let built = match (name, arg.is_some()) {
        ("const_guess", true) => const_guess(number(u64::MAX)?),
        ("const_guess_dummy", true) => const_guess_dummy(number(u64::MAX)?),
        ("invalid_guess", false) => invalid_guess(),
        ("random_guess", true) => random_guess(number(MAX_RANDOM_BITS)? as u32),
        ("linear_search", true) => linear_search(number(MAX_SEARCH)?.max(1)),
        ("bsgs", true) => bsgs(number(MAX_SEARCH)?.max(1)),
        ("echo_x", false) => echo_x(),
        ("const_string", true) => const_string(arg.unwrap().parse().map_err(|_| bad())?),
        ("label_echo", false) => label_echo_checked(0),
        ("label_echo_checked", true) => label_echo_checked(number(MAX_SEARCH)?),
        _ => return Err(RegistryError::Unknown(spec.to_string())),
    };
    Ok(built)
}

fn named(name: String, instructions: Vec<Instr>, query_bound: u64) -> Builtin {
    Builtin { program: GenericProgram::new(name, instructions), query_bound }
}

/// Outputs the integer `c` regardless of the input.
pub fn const_guess(c: u64) -> Builtin {
    named(format!("const_guess({c})"), vec![Instr::OutputInt(IntExpr::Const(c))], 0)
}

/// Like [`const_guess`] but spends one oracle call first.
pub fn const_guess_dummy(c: u64) -> Builtin {
    named(
        format!("const_guess_dummy({c})"),
        vec![
            Instr::LoadInput { dst: 0, input: 0 },
            Instr::Add { dst: 1, a: 0, b: 0 },
            Instr::OutputInt(IntExpr::Const(c)),
        ],
        1,
    )
}

/// Outputs `N`, which is never an element of `Z_N`.
pub fn invalid_guess() -> Builtin {
    named("invalid_guess".into(), vec![Instr::OutputInt(IntExpr::Modulus)], 0)
}

/// Flips `bits` coins and outputs the resulting numeral reduced mod `N`.
pub fn random_guess(bits: u32) -> Builtin {
    fn emit(depth: u32, bits: u32, value: u64, out: &mut Vec<Instr>) {
        if depth == bits {
            out.push(Instr::OutputInt(IntExpr::ConstModN(value)));
            return;
        }
        let at = out.len();
        out.push(Instr::CoinBranch { target: 0 });
        emit(depth + 1, bits, value << 1, out);
        let target = out.len();
        out[at] = Instr::CoinBranch { target };
        emit(depth + 1, bits, value << 1 | 1, out);
    }
    let mut instructions = Vec::new();
    emit(0, bits, 0, &mut instructions);
    let mut b = named(format!("random_guess({bits})"), instructions, 0);
    b.program.coins = bits;
    b
}

/// Compares `σ(x)` with `σ(1), σ(2), …, σ(m+1)` using `m` additions, then
/// gives up by outputting `N`. Covers `min(m+1, N)` exponents.
pub fn linear_search(m: u64) -> Builtin {
    let mut code = Vec::new();
    let mut hits = Vec::new();
    code.push(Instr::LoadInput { dst: 0, input: 0 });
    code.push(Instr::LoadInput { dst: 1, input: 1 });
    hits.push((code.len(), 1));
    code.push(Instr::EqBranch { a: 1, b: 0, target: 0 });
    for exponent in 2..=m + 1 {
        let prev = if exponent == 2 { 0 } else { 2 };
        code.push(Instr::Add { dst: 2, a: prev, b: 0 });
        hits.push((code.len(), exponent));
        code.push(Instr::EqBranch { a: 1, b: 2, target: 0 });
    }
    code.push(Instr::OutputInt(IntExpr::Modulus));
    patch_hits(&mut code, &hits);
    named(format!("linear_search({m})"), code, m)
}

/// Baby-step giant-step with `m` oracle calls: `b = ⌈m/2⌉` baby steps cover
/// `1..=b`, then `m − b` giant steps of size `b` extend coverage to
/// `1..=b(m − b + 1)`.
pub fn bsgs(m: u64) -> Builtin {
    if m == 1 {
        let mut b = linear_search(1);
        b.program.name = "bsgs(1)".into();
        return b;
    }
    let baby = m.div_ceil(2);
    let giant = m - baby;
    let baby_reg = |j: u64| -> Reg { if j == 1 { 0 } else { (j + 1) as Reg } };
    let step_reg = (baby + 2) as Reg;
    let cur_reg = (baby + 3) as Reg;
    let mut code = Vec::new();
    let mut hits = Vec::new();
    code.push(Instr::LoadInput { dst: 0, input: 0 });
    code.push(Instr::LoadInput { dst: 1, input: 1 });
    for j in 1..=baby {
        if j > 1 {
            code.push(Instr::Add { dst: baby_reg(j), a: baby_reg(j - 1), b: 0 });
        }
        hits.push((code.len(), j));
        code.push(Instr::EqBranch { a: 1, b: baby_reg(j), target: 0 });
    }
    if giant > 0 {
        code.push(Instr::Inv { dst: step_reg, a: baby_reg(baby) });
        for i in 1..=giant {
            let src = if i == 1 { 1 } else { cur_reg };
            code.push(Instr::Add { dst: cur_reg, a: src, b: step_reg });
            for j in 1..=baby {
                hits.push((code.len(), i * baby + j));
                code.push(Instr::EqBranch { a: cur_reg, b: baby_reg(j), target: 0 });
            }
        }
    }
    code.push(Instr::OutputInt(IntExpr::Modulus));
    patch_hits(&mut code, &hits);
    named(format!("bsgs({m})"), code, m)
}

/// Points each recorded `EqBranch` at a fresh `out_int exponent%N` appended to the program.
fn patch_hits(code: &mut Vec<Instr>, hits: &[(usize, u64)]) {
    for &(at, exponent) in hits {
        let target = code.len();
        code.push(Instr::OutputInt(IntExpr::ConstModN(exponent)));
        if let Instr::EqBranch { target: t, .. } = &mut code[at] {
            *t = target;
        }
    }
}

/// Outputs the second input handle verbatim (a CDH guess of `σ(x)`).
pub fn echo_x() -> Builtin {
    named(
        "echo_x".into(),
        vec![Instr::LoadInput { dst: 0, input: 1 }, Instr::OutputReg(0)],
        0,
    )
}

/// Outputs a fixed bit string.
pub fn const_string(bits: BinaryString) -> Builtin {
    named(format!("const_string({bits})"), vec![Instr::OutputStr(bits)], 0)
}

/// Checks that `σ(j)` reads as the numeral `j` for `j = 1..=k` (using `k − 1`
/// additions) and, if so, outputs the numeral of `σ(x)`; otherwise outputs `N`.
/// With `k = 0` it echoes the label unconditionally.
pub fn label_echo_checked(k: u64) -> Builtin {
    let mut code = vec![Instr::LoadInput { dst: 0, input: 0 }];
    for j in 1..=k {
        let reg = if j == 1 { 0 } else { 1 };
        if j > 1 {
            let prev = if j == 2 { 0 } else { 1 };
            code.push(Instr::Add { dst: 1, a: prev, b: 0 });
        }
        let target = code.len() + 2;
        code.push(Instr::LabelBranch { a: reg, label: j, target });
        code.push(Instr::OutputInt(IntExpr::Modulus));
    }
    code.push(Instr::LoadInput { dst: 2, input: 1 });
    code.push(Instr::OutputInt(IntExpr::Label(2)));
    let name = if k == 0 { "label_echo".to_string() } else { format!("label_echo_checked({k})") };
    named(name, code, k.saturating_sub(1))
}
