use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::open_set::EnumeratedOpenSet;
use super::DiagError;
use crate::bounds::{phi, EscapeSchedule};
use crate::measure::{pow2_neg, CylinderSet, ExactRational, Prefix};

/// Per-adversary, per-exponent test sets `n ↦ C_{i,d,n}` over a registry of
/// `registry_size()` adversaries, materialisable up to `horizon()`.
pub trait TestFamily<P: Prefix> {
    fn registry_size(&self) -> u64;
    fn horizon(&self) -> u64;
    /// `C_{i,d,n}` for `1 ≤ i ≤ registry_size()` and `n ≤ horizon()`.
    fn constraint_set(&self, i: u64, d: u32, n: u64) -> Result<CylinderSet<P>, DiagError>;
}

#[derive(Clone, Debug)]
pub struct AssemblyConfig {
    pub schedule: EscapeSchedule,
    /// Pairs `m = 1, …, pair_cap` are considered.
    pub pair_cap: u64,
    /// Check `Λ(C_{i,d,n}) < n^{−d}`, `Λ(C_m) < 2^{−m}` and the `2^{−k}`
    /// approximation contract on the materialised sets.
    pub check_bounds: bool,
}

impl AssemblyConfig {
    pub fn new(schedule: EscapeSchedule) -> Self {
        Self { schedule, pair_cap: 64, check_bounds: true }
    }
}

/// One materialised `C_{i,d,n}` with `(i, d) = φ(m)` and `n ≥ g(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PieceReport {
    pub m: u64,
    pub i: u64,
    pub d: u32,
    pub g: u64,
    pub n: u64,
    pub members: usize,
    pub measure: ExactRational,
}

/// `C = ⋃_m ⋃_{n ≥ g(m)} C_{φ(m), n}` truncated at the family's horizon.
#[derive(Clone, Debug)]
pub struct AssembledOpenSet<P: Prefix> {
    pieces: Vec<(PieceReport, CylinderSet<P>)>,
    union: CylinderSet<P>,
    measure: ExactRational,
    pairs_in_range: u64,
}

impl<P: Prefix> AssembledOpenSet<P> {
    pub fn pieces(&self) -> impl Iterator<Item = &PieceReport> + '_ {
        self.pieces.iter().map(|(r, _)| r)
    }

    pub fn piece_sets(&self) -> impl Iterator<Item = (&PieceReport, &CylinderSet<P>)> + '_ {
        self.pieces.iter().map(|(r, s)| (r, s))
    }

    pub fn union(&self) -> &CylinderSet<P> {
        &self.union
    }

    pub fn measure(&self) -> &ExactRational {
        &self.measure
    }

    /// Number of pairs `m` whose cutoff `g(m)` falls within the horizon.
    pub fn pairs_in_range(&self) -> u64 {
        self.pairs_in_range
    }

    /// True when every materialised constraint set is empty.
    pub fn is_vacuous(&self) -> bool {
        self.union.is_empty()
    }

    fn collect(&self, keep: impl Fn(&PieceReport) -> bool) -> CylinderSet<P> {
        let mut out = CylinderSet::new();
        for (r, s) in &self.pieces {
            if keep(r) {
                out.extend(s);
            }
        }
        out
    }

    fn in_d_set(r: &PieceReport, k: u32) -> bool {
        r.m <= k as u64 && r.g.checked_shl(k).is_none_or(|limit| r.n < limit)
    }

    /// `D_k = ⋃_{m ≤ k} ⋃_{g(m) ≤ n < g(m)·2^k} C_{φ(m), n}`.
    pub fn d_set(&self, k: u32) -> CylinderSet<P> {
        self.collect(|r| Self::in_d_set(r, k))
    }

    /// Human-readable summary of the materialised pieces.
    pub fn report(&self) -> String {
        let mut out = format!(
            "pairs with g(m) within horizon: {}\nmeasure: {}\n",
            self.pairs_in_range, self.measure
        );
        if self.is_vacuous() {
            out.push_str("all materialised constraint sets are empty\n");
        }
        out.push_str("m,i,d,g,n,members,measure\n");
        for r in self.pieces() {
            out.push_str(&format!("{},{},{},{},{},{},{}\n", r.m, r.i, r.d, r.g, r.n, r.members, r.measure));
        }
        out
    }
}

impl<P: Prefix> EnumeratedOpenSet<P> for AssembledOpenSet<P> {
    /// Stage `s` holds the pieces with `m ≤ s` and `n < g(m) + s`.
    fn stage(&self, s: u64) -> CylinderSet<P> {
        self.collect(|r| r.m <= s && r.n < r.g.saturating_add(s))
    }

    /// `Λ(⟦D_{k+1}⟧)`.
    fn measure_approx(&self, k: u32) -> Result<ExactRational, DiagError> {
        Ok(self.d_set(k + 1).measure())
    }

    fn finite(&self) -> Option<&CylinderSet<P>> {
        Some(&self.union)
    }
}

/// Assembles the test family into one open set using the cutoff schedule `g`.
pub fn assemble_open_set<P: Prefix>(
    family: &dyn TestFamily<P>,
    config: &AssemblyConfig,
) -> Result<AssembledOpenSet<P>, DiagError> {
    let horizon = family.horizon();
    let mut pieces = Vec::new();
    let mut pairs_in_range = 0;
    for m in 1..=config.pair_cap {
        let g = config.schedule.eval(m)?;
        if g > BigUint::from(horizon) {
            continue;
        }
        pairs_in_range += 1;
        let g = g.to_u64().expect("bounded by the horizon");
        let (i, d) = phi(m);
        if i > family.registry_size() {
            continue;
        }
        let mut pair_union = CylinderSet::new();
        for n in g.max(1)..=horizon {
            let set = family.constraint_set(i, d, n)?;
            let measure = set.measure();
            if config.check_bounds {
                let bound = ExactRational::new(1.into(), BigUint::from(n).pow(d).into());
                if measure >= bound {
                    return Err(DiagError::ScheduleBoundViolated(format!(
                        "Λ(C_{{{i},{d},{n}}}) = {measure} is not below 1/{n}^{d}"
                    )));
                }
            }
            pair_union.extend(&set);
            pieces.push((PieceReport { m, i, d, g, n, members: set.len(), measure }, set));
        }
        if config.check_bounds {
            let measure = pair_union.measure();
            if measure >= pow2_neg(m) {
                return Err(DiagError::ScheduleBoundViolated(format!(
                    "Λ(C_{m}) = {measure} is not below 2^-{m}"
                )));
            }
        }
    }
    let mut union = CylinderSet::new();
    for (_, s) in &pieces {
        union.extend(s);
    }
    let union = union.normalized();
    let measure = union.measure();
    let assembled = AssembledOpenSet { pieces, union, measure, pairs_in_range };
    if config.check_bounds {
        check_approximation(&assembled)?;
    }
    Ok(assembled)
}

/// `|Λ(⟦C⟧) − g(k)| ≤ 2^{−k}` for every `k` until `D_{k+1}` is all of `C`.
fn check_approximation<P: Prefix>(open: &AssembledOpenSet<P>) -> Result<(), DiagError> {
    let total = open.measure();
    for k in 0..64u32 {
        let g = open.measure_approx(k)?;
        let gap = total - &g;
        if gap > pow2_neg(k as u64) {
            return Err(DiagError::ScheduleBoundViolated(format!(
                "g({k}) = {g} is farther than 2^-{k} from the measure {total}"
            )));
        }
        if open.pieces.iter().all(|(r, _)| AssembledOpenSet::<P>::in_d_set(r, k + 1)) {
            break;
        }
    }
    Ok(())
}
