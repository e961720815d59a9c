use std::collections::HashMap;
use std::fmt::{self, Write};

use thiserror::Error;

use crate::measure::BinaryString;

pub type Reg = u16;

/// Integer-valued output expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntExpr {
    Const(u64),
    /// `c mod N`.
    ConstModN(u64),
    /// The group order `N` itself (never a valid exponent).
    Modulus,
    /// The handle in a register read as a binary numeral.
    Label(Reg),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    LoadInput { dst: Reg, input: usize },
    Add { dst: Reg, a: Reg, b: Reg },
    Inv { dst: Reg, a: Reg },
    /// `value · σ(1)` built from input 0 by double-and-add; each oracle call
    /// is counted.
    ConstElem { dst: Reg, value: u64 },
    EqBranch { a: Reg, b: Reg, target: usize },
    /// Branch if the handle in `a`, read as a numeral, equals `label`.
    LabelBranch { a: Reg, label: u64, target: usize },
    /// Consume one coin; branch on 1.
    CoinBranch { target: usize },
    Jump { target: usize },
    OutputInt(IntExpr),
    OutputReg(Reg),
    OutputStr(BinaryString),
}

impl Instr {
    fn successors(&self, pc: usize) -> Vec<usize> {
        match self {
            Instr::EqBranch { target, .. }
            | Instr::LabelBranch { target, .. }
            | Instr::CoinBranch { target } => vec![pc + 1, *target],
            Instr::Jump { target } => vec![*target],
            Instr::OutputInt(_) | Instr::OutputReg(_) | Instr::OutputStr(_) => vec![],
            _ => vec![pc + 1],
        }
    }

    fn reads(&self) -> Vec<Reg> {
        match self {
            Instr::Add { a, b, .. } | Instr::EqBranch { a, b, .. } => vec![*a, *b],
            Instr::Inv { a, .. } | Instr::LabelBranch { a, .. } | Instr::OutputReg(a) => vec![*a],
            Instr::OutputInt(IntExpr::Label(a)) => vec![*a],
            _ => vec![],
        }
    }

    fn writes(&self) -> Option<Reg> {
        match self {
            Instr::LoadInput { dst, .. }
            | Instr::Add { dst, .. }
            | Instr::Inv { dst, .. }
            | Instr::ConstElem { dst, .. } => Some(*dst),
            _ => None,
        }
    }
}

/// A branching program over handle registers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericProgram {
    pub name: String,
    pub registers: usize,
    /// Length of the coin tape; exact experiments enumerate all `2^coins` tapes.
    pub coins: u32,
    pub step_bound: u64,
    pub instructions: Vec<Instr>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("program is empty")]
    Empty,
    #[error("instruction {pc}: branch target {target} out of range")]
    TargetOutOfRange { pc: usize, target: usize },
    #[error("instruction {pc}: register r{reg} out of range")]
    RegisterOutOfRange { pc: usize, reg: Reg },
    #[error("instruction {pc}: register r{reg} may be read before it is written")]
    ReadBeforeWrite { pc: usize, reg: Reg },
    #[error("instruction {pc}: execution can fall off the end of the program")]
    FallsOffEnd { pc: usize },
    #[error("longest path takes {longest} steps, above the bound {bound}")]
    StepBoundTooSmall { longest: u64, bound: u64 },
}

impl GenericProgram {
    pub fn new(name: impl Into<String>, instructions: Vec<Instr>) -> Self {
        let registers = instructions
            .iter()
            .flat_map(|i| i.reads().into_iter().chain(i.writes()))
            .map(|r| r as usize + 1)
            .max()
            .unwrap_or(0);
        Self { name: name.into(), registers, coins: 0, step_bound: 10_000, instructions }
    }

    pub fn with_coins(mut self, coins: u32) -> Self {
        self.coins = coins;
        self
    }

    /// Static checks: branch targets and registers in range, no path falls
    /// off the end, every read is preceded by a write on all paths, and, for
    /// loop-free programs, the longest path fits in `step_bound`.
    pub fn validate(&self) -> Result<(), ProgramError> {
        let len = self.instructions.len();
        if len == 0 {
            return Err(ProgramError::Empty);
        }
        for (pc, ins) in self.instructions.iter().enumerate() {
            for reg in ins.reads().into_iter().chain(ins.writes()) {
                if reg as usize >= self.registers {
                    return Err(ProgramError::RegisterOutOfRange { pc, reg });
                }
            }
            for s in ins.successors(pc) {
                if s >= len {
                    return if s == pc + 1 && !matches!(ins, Instr::Jump { .. }) && s == len {
                        Err(ProgramError::FallsOffEnd { pc })
                    } else {
                        Err(ProgramError::TargetOutOfRange { pc, target: s })
                    };
                }
            }
        }
        self.check_definite_writes()?;
        if let Some(longest) = self.longest_path() {
            if longest > self.step_bound {
                return Err(ProgramError::StepBoundTooSmall { longest, bound: self.step_bound });
            }
        }
        Ok(())
    }

    /// Forward must-analysis of written registers.
    fn check_definite_writes(&self) -> Result<(), ProgramError> {
        let len = self.instructions.len();
        let regs = self.registers;
        // None = not yet reached (top element).
        let mut written_in: Vec<Option<Vec<bool>>> = vec![None; len];
        written_in[0] = Some(vec![false; regs]);
        let mut changed = true;
        while changed {
            changed = false;
            for pc in 0..len {
                let Some(inset) = written_in[pc].clone() else { continue };
                let ins = &self.instructions[pc];
                let mut out = inset;
                if let Some(w) = ins.writes() {
                    out[w as usize] = true;
                }
                for s in ins.successors(pc) {
                    let merged = match &written_in[s] {
                        None => out.clone(),
                        Some(cur) => cur.iter().zip(&out).map(|(a, b)| *a && *b).collect(),
                    };
                    if written_in[s].as_ref() != Some(&merged) {
                        written_in[s] = Some(merged);
                        changed = true;
                    }
                }
            }
        }
        for (pc, ins) in self.instructions.iter().enumerate() {
            let Some(inset) = &written_in[pc] else { continue };
            if let Some(reg) = ins.reads().into_iter().find(|r| !inset[*r as usize]) {
                return Err(ProgramError::ReadBeforeWrite { pc, reg });
            }
        }
        Ok(())
    }

    /// Longest path in executed instructions, or `None` when the control-flow
    /// graph has a cycle (the step bound is then enforced at run time).
    fn longest_path(&self) -> Option<u64> {
        let len = self.instructions.len();
        // Memoised DFS with cycle detection.
        let mut state = vec![0u8; len];
        let mut best = vec![0u64; len];
        fn visit(p: &GenericProgram, pc: usize, state: &mut [u8], best: &mut [u64]) -> Option<u64> {
            match state[pc] {
                1 => return None,
                2 => return Some(best[pc]),
                _ => {}
            }
            state[pc] = 1;
            let mut longest = 0;
            for s in p.instructions[pc].successors(pc) {
                longest = longest.max(visit(p, s, state, best)?);
            }
            state[pc] = 2;
            best[pc] = longest + 1;
            Some(best[pc])
        }
        visit(self, 0, &mut state, &mut best)
    }

    /// Renders the program in the assembly format accepted by [`GenericProgram::parse`].
    pub fn to_assembly(&self) -> String {
        let mut out = String::new();
        writeln!(out, ".name {}", self.name).unwrap();
        writeln!(out, ".regs {}", self.registers).unwrap();
        writeln!(out, ".coins {}", self.coins).unwrap();
        writeln!(out, ".steps {}", self.step_bound).unwrap();
        for ins in &self.instructions {
            writeln!(out, "{ins}").unwrap();
        }
        out
    }

    /// Parses the line-oriented assembly format.
    ///
    /// ```text
    /// .name guess
    /// load r0 0          # r0 <- input 0
    /// eq r0 r1 hit       # labels or @index as targets
    /// out_int N
    /// hit: out_int 1%N
    /// ```
    pub fn parse(text: &str) -> Result<GenericProgram, AsmError> {
        let mut name = String::from("program");
        let mut registers = None;
        let mut coins = 0;
        let mut step_bound = 10_000;
        let mut labels: HashMap<String, usize> = HashMap::new();
        let mut pending: Vec<(usize, Vec<String>)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('.') {
                let mut parts = rest.split_whitespace();
                let key = parts.next().unwrap_or("");
                let value = parts.next().ok_or(AsmError::new(line_no, "directive needs a value"))?;
                let num = || value.parse::<u64>().map_err(|_| AsmError::new(line_no, "bad number"));
                match key {
                    "name" => name = value.to_string(),
                    "regs" => registers = Some(num()? as usize),
                    "coins" => coins = num()? as u32,
                    "steps" => step_bound = num()?,
                    _ => return Err(AsmError::new(line_no, &format!("unknown directive .{key}"))),
                }
                continue;
            }
            while let Some((label, rest)) = line.split_once(':') {
                let label = label.trim();
                if label.is_empty() || label.contains(char::is_whitespace) {
                    break;
                }
                if labels.insert(label.to_string(), pending.len()).is_some() {
                    return Err(AsmError::new(line_no, &format!("duplicate label {label}")));
                }
                line = rest.trim();
            }
            if line.is_empty() {
                continue;
            }
            pending.push((line_no, line.split_whitespace().map(str::to_string).collect()));
        }

        let mut instructions = Vec::with_capacity(pending.len());
        for (line_no, toks) in &pending {
            instructions.push(parse_instr(*line_no, toks, &labels)?);
        }
        let mut program = GenericProgram::new(name, instructions);
        if let Some(r) = registers {
            program.registers = r;
        }
        program.coins = coins;
        program.step_bound = step_bound;
        Ok(program)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct AsmError {
    pub line: usize,
    pub message: String,
}

impl AsmError {
    fn new(line: usize, message: &str) -> Self {
        Self { line, message: message.to_string() }
    }
}

fn parse_instr(line: usize, toks: &[String], labels: &HashMap<String, usize>) -> Result<Instr, AsmError> {
    let err = |m: &str| AsmError::new(line, m);
    let arity = |n: usize| {
        if toks.len() == n + 1 {
            Ok(())
        } else {
            Err(err(&format!("{} expects {n} operands", toks[0])))
        }
    };
    let reg = |t: &str| -> Result<Reg, AsmError> {
        t.strip_prefix('r')
            .and_then(|d| d.parse::<Reg>().ok())
            .ok_or_else(|| err(&format!("bad register {t:?}")))
    };
    let num = |t: &str| t.parse::<u64>().map_err(|_| err(&format!("bad number {t:?}")));
    let target = |t: &str| -> Result<usize, AsmError> {
        if let Some(idx) = t.strip_prefix('@') {
            return idx.parse().map_err(|_| err(&format!("bad target {t:?}")));
        }
        labels.get(t).copied().ok_or_else(|| err(&format!("unknown label {t:?}")))
    };
    let ins = match toks[0].as_str() {
        "load" => {
            arity(2)?;
            let input = toks[2].strip_prefix("in").unwrap_or(&toks[2]);
            Instr::LoadInput { dst: reg(&toks[1])?, input: num(input)? as usize }
        }
        "add" => {
            arity(3)?;
            Instr::Add { dst: reg(&toks[1])?, a: reg(&toks[2])?, b: reg(&toks[3])? }
        }
        "inv" => {
            arity(2)?;
            Instr::Inv { dst: reg(&toks[1])?, a: reg(&toks[2])? }
        }
        "const" => {
            arity(2)?;
            Instr::ConstElem { dst: reg(&toks[1])?, value: num(&toks[2])? }
        }
        "eq" => {
            arity(3)?;
            Instr::EqBranch { a: reg(&toks[1])?, b: reg(&toks[2])?, target: target(&toks[3])? }
        }
        "label_eq" => {
            arity(3)?;
            Instr::LabelBranch { a: reg(&toks[1])?, label: num(&toks[2])?, target: target(&toks[3])? }
        }
        "coin" => {
            arity(1)?;
            Instr::CoinBranch { target: target(&toks[1])? }
        }
        "jmp" => {
            arity(1)?;
            Instr::Jump { target: target(&toks[1])? }
        }
        "out_int" => {
            arity(1)?;
            let t = toks[1].as_str();
            let expr = if t == "N" {
                IntExpr::Modulus
            } else if let Some(c) = t.strip_suffix("%N") {
                IntExpr::ConstModN(num(c)?)
            } else if let Some(r) = t.strip_prefix("label(").and_then(|r| r.strip_suffix(')')) {
                IntExpr::Label(reg(r)?)
            } else {
                IntExpr::Const(num(t)?)
            };
            Instr::OutputInt(expr)
        }
        "out_reg" => {
            arity(1)?;
            Instr::OutputReg(reg(&toks[1])?)
        }
        "out_str" => {
            arity(1)?;
            Instr::OutputStr(toks[1].parse().map_err(|_| err("bad bit string"))?)
        }
        other => return Err(err(&format!("unknown instruction {other:?}"))),
    };
    Ok(ins)
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntExpr::Const(c) => write!(f, "{c}"),
            IntExpr::ConstModN(c) => write!(f, "{c}%N"),
            IntExpr::Modulus => f.write_str("N"),
            IntExpr::Label(r) => write!(f, "label(r{r})"),
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::LoadInput { dst, input } => write!(f, "load r{dst} in{input}"),
            Instr::Add { dst, a, b } => write!(f, "add r{dst} r{a} r{b}"),
            Instr::Inv { dst, a } => write!(f, "inv r{dst} r{a}"),
            Instr::ConstElem { dst, value } => write!(f, "const r{dst} {value}"),
            Instr::EqBranch { a, b, target } => write!(f, "eq r{a} r{b} @{target}"),
            Instr::LabelBranch { a, label, target } => write!(f, "label_eq r{a} {label} @{target}"),
            Instr::CoinBranch { target } => write!(f, "coin @{target}"),
            Instr::Jump { target } => write!(f, "jmp @{target}"),
            Instr::OutputInt(e) => write!(f, "out_int {e}"),
            Instr::OutputReg(r) => write!(f, "out_reg r{r}"),
            Instr::OutputStr(s) => write!(f, "out_str {s}"),
        }
    }
}
