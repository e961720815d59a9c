use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use num_traits::{One, Zero};

use super::open_set::{approximating_stage, EnumeratedOpenSet};
use super::DiagError;
use crate::measure::{pow2_neg, BinaryString, CylinderSet, ExactRational, FamilyPrefix, Prefix};

/// Deepest family prefix the escape will build: level 3 already has
/// `8! = 40320` candidate extensions per step.
pub const FAMILY_DEPTH_CAP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EscapeMode {
    /// Exact conditional measures of a finite open set.
    Exact,
    /// Stage/precision approximations only.
    Approx,
}

#[derive(Clone, Copy, Debug)]
pub struct EscapeConfig {
    pub mode: EscapeMode,
    /// Largest stage index the approximation search may visit.
    pub stage_cap: u64,
    /// Largest precision `k` tried before giving up on a candidate.
    pub max_precision: u32,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self { mode: EscapeMode::Exact, stage_cap: 1 << 32, max_precision: 256 }
    }
}

impl EscapeConfig {
    pub fn approx() -> Self {
        Self { mode: EscapeMode::Approx, ..Self::default() }
    }
}

/// Evidence recorded for one extension step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepWitness {
    /// The children's conditional measures sum to the parent's.
    Exact { parent: ExactRational, children_sum: ExactRational },
    /// `F(child) ≤ bound < volume`, from precision `k` and stage `h(k)`.
    Approx { precision: u32, stage: u64, bound: ExactRational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeStep<P> {
    /// Depth reached after this step (1-based).
    pub level: usize,
    pub candidates: Option<u128>,
    /// Candidates examined, including the chosen one.
    pub scanned: u64,
    pub chosen_index: u128,
    pub prefix: P,
    /// `F(prefix)` in exact mode, a certified upper bound in approx mode.
    pub conditional: ExactRational,
    pub cell_volume: ExactRational,
    pub witness: StepWitness,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeTranscript<P> {
    pub mode: EscapeMode,
    /// `Λ(⟦S⟧)` in exact mode, a certified upper bound below 1 in approx mode.
    pub initial: ExactRational,
    pub prefix: P,
    pub steps: Vec<EscapeStep<P>>,
}

impl<P: Prefix> EscapeTranscript<P> {
    /// Every recorded step keeps the conditional measure strictly below the cell volume.
    pub fn invariant_holds(&self) -> bool {
        self.initial < ExactRational::one() && self.steps.iter().all(|s| s.conditional < s.cell_volume)
    }

    /// Plain-text report, one line per step.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let mode = match self.mode {
            EscapeMode::Exact => "exact",
            EscapeMode::Approx => "approx",
        };
        writeln!(out, "mode: {mode}").unwrap();
        writeln!(out, "initial_measure: {}", self.initial).unwrap();
        writeln!(out, "prefix: {}", self.prefix).unwrap();
        writeln!(out, "step,candidates,scanned,chosen_index,f_num,f_den,cell_volume,prefix").unwrap();
        for s in &self.steps {
            let candidates = s.candidates.map_or_else(|| "?".to_string(), |c| c.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.level,
                candidates,
                s.scanned,
                s.chosen_index,
                s.conditional.numer(),
                s.conditional.denom(),
                s.cell_volume,
                s.prefix
            )
            .unwrap();
        }
        out
    }
}

/// Builds a prefix of length `depth` avoiding `⟦S⟧`, choosing at each step the
/// least child (in the prefix type's tie-break order) whose conditional
/// measure stays below its volume.
pub fn escape<P: Prefix>(
    open: &dyn EnumeratedOpenSet<P>,
    depth: usize,
    config: &EscapeConfig,
) -> Result<EscapeTranscript<P>, DiagError> {
    match config.mode {
        EscapeMode::Exact => escape_exact(open.finite().ok_or(DiagError::ExactNeedsFinite)?, depth),
        EscapeMode::Approx => escape_approx(open, depth, config),
    }
}

pub fn escape_binary(
    open: &dyn EnumeratedOpenSet<BinaryString>,
    depth: usize,
    config: &EscapeConfig,
) -> Result<EscapeTranscript<BinaryString>, DiagError> {
    escape(open, depth, config)
}

pub fn escape_family(
    open: &dyn EnumeratedOpenSet<FamilyPrefix>,
    depth: usize,
    config: &EscapeConfig,
) -> Result<EscapeTranscript<FamilyPrefix>, DiagError> {
    if depth > FAMILY_DEPTH_CAP {
        return Err(DiagError::DepthTooLarge { depth, cap: FAMILY_DEPTH_CAP });
    }
    escape(open, depth, config)
}

fn escape_exact<P: Prefix>(set: &CylinderSet<P>, depth: usize) -> Result<EscapeTranscript<P>, DiagError> {
    let mut relevant: Vec<P> = set.normalized().members().cloned().collect();
    let initial = set.measure();
    if initial >= ExactRational::one() {
        return Err(DiagError::MeasureNotBelowOne(initial));
    }
    let mut prefix = P::root();
    let mut current = initial.clone();
    let mut steps = Vec::with_capacity(depth);
    let mut volumes: HashMap<usize, ExactRational> = HashMap::new();
    for level in 1..=depth {
        let candidates = P::child_count_at_depth(prefix.depth());
        // Mass of ⟦S⟧ inside each child cell that contains some member.
        let mut mass: BTreeMap<u128, ExactRational> = BTreeMap::new();
        for m in &relevant {
            let vol = volumes.entry(m.depth()).or_insert_with(|| P::volume_at_depth(m.depth()));
            let child = m.truncated(level).child_index();
            *mass.entry(child).or_insert_with(ExactRational::zero) += &*vol;
        }
        let children_sum: ExactRational = mass.values().sum();
        let cell_volume = P::volume_at_depth(level);
        let mut index = 0u128;
        let chosen = loop {
            if candidates.is_some_and(|c| index >= c) {
                return Err(DiagError::NoExtension { prefix: prefix.to_string() });
            }
            match mass.get(&index) {
                None => break (index, ExactRational::zero()),
                Some(f) if *f < cell_volume => break (index, f.clone()),
                Some(_) => index += 1,
            }
        };
        let (chosen_index, conditional) = chosen;
        prefix = prefix.child(chosen_index);
        relevant.retain(|m| prefix.is_prefix_of(m));
        steps.push(EscapeStep {
            level,
            candidates,
            scanned: (chosen_index + 1) as u64,
            chosen_index,
            prefix: prefix.clone(),
            conditional: conditional.clone(),
            cell_volume,
            witness: StepWitness::Exact { parent: current, children_sum },
        });
        current = conditional;
    }
    Ok(EscapeTranscript { mode: EscapeMode::Exact, initial, prefix, steps })
}

struct Level<P: Prefix> {
    stage_index: u64,
    stage: CylinderSet<P>,
    stage_measure: ExactRational,
    g: ExactRational,
}

fn escape_approx<P: Prefix>(
    open: &dyn EnumeratedOpenSet<P>,
    depth: usize,
    config: &EscapeConfig,
) -> Result<EscapeTranscript<P>, DiagError> {
    // Certify Λ(⟦S⟧) < 1 from some g(k) < 1 − 2^{−k}.
    let mut initial = None;
    let mut last_g = ExactRational::zero();
    for k in 0..=config.max_precision {
        let g = open.measure_approx(k)?;
        let bound = &g + pow2_neg(k as u64);
        if bound < ExactRational::one() {
            initial = Some(bound);
            break;
        }
        last_g = g;
    }
    let initial = initial.ok_or(DiagError::MeasureNotBelowOne(last_g))?;

    let mut cache: HashMap<u32, Level<P>> = HashMap::new();
    let mut prefix = P::root();
    let mut steps = Vec::with_capacity(depth);
    for level in 1..=depth {
        let candidates = P::child_count_at_depth(prefix.depth());
        let cell_volume = P::volume_at_depth(level);
        // Below this precision the margin 2^{−k} alone exceeds the volume.
        let start = (cell_volume.denom().bits().saturating_sub(cell_volume.numer().bits())) as u32;
        let mut index = 0u128;
        let decision = 'candidates: loop {
            if candidates.is_some_and(|c| index >= c) {
                return Err(DiagError::NoExtension { prefix: prefix.to_string() });
            }
            let child = prefix.child(index);
            for k in start.min(config.max_precision)..=config.max_precision {
                if !cache.contains_key(&k) {
                    let (stage_index, stage) = approximating_stage(open, k, config.stage_cap)?;
                    let stage_measure = stage.measure();
                    let g = open.measure_approx(k)?;
                    cache.insert(k, Level { stage_index, stage, stage_measure, g });
                }
                let lvl = &cache[&k];
                let lower = lvl.stage.conditional_measure(&child);
                if lower == cell_volume {
                    // The cell is covered by a finite stage, so F(child) = volume.
                    index += 1;
                    continue 'candidates;
                }
                let bound = &lvl.g - &lvl.stage_measure + lower + pow2_neg(k as u64);
                if bound < cell_volume {
                    break 'candidates (index, child, k, lvl.stage_index, bound);
                }
            }
            return Err(DiagError::PrecisionExhausted {
                depth: level,
                candidate: child.to_string(),
                precision: config.max_precision,
            });
        };
        let (chosen_index, child, precision, stage, bound) = decision;
        prefix = child;
        steps.push(EscapeStep {
            level,
            candidates,
            scanned: (chosen_index + 1) as u64,
            chosen_index,
            prefix: prefix.clone(),
            conditional: bound.clone(),
            cell_volume,
            witness: StepWitness::Approx { precision, stage, bound },
        });
    }
    Ok(EscapeTranscript { mode: EscapeMode::Approx, initial, prefix, steps })
}

/// Independent check that `prefix` has not entered `⟦S⟧`: no member of `S`
/// is a prefix of it, and some extension of it avoids every member cell.
pub fn verify_escape<P: Prefix>(prefix: &P, set: &CylinderSet<P>) -> bool {
    let below: Vec<&P> = set.members().filter(|m| prefix.is_prefix_of(m) && m.depth() > prefix.depth()).collect();
    !set.covers_prefix(prefix) && has_uncovered_extension(prefix, &below)
}

/// `members` are exactly the set members strictly extending `node`.
fn has_uncovered_extension<P: Prefix>(node: &P, members: &[&P]) -> bool {
    if members.is_empty() {
        return true;
    }
    let depth = node.depth() + 1;
    let mut groups: BTreeMap<P, Vec<&P>> = BTreeMap::new();
    for m in members {
        let child = m.truncated(depth);
        let entry = groups.entry(child).or_default();
        if m.depth() > depth {
            entry.push(m);
        }
    }
    // A child with no member at or below it is uncovered.
    if P::child_count_at_depth(node.depth()).is_none_or(|c| (groups.len() as u128) < c) {
        return true;
    }
    for (child, below) in &groups {
        let covered = members.iter().any(|m| m.depth() == depth && *m == child);
        if !covered && has_uncovered_extension(child, below) {
            return true;
        }
    }
    false
}
