use num_bigint::BigInt;
use num_integer::Integer;

use super::DiagError;
use crate::measure::{pow2_neg, CylinderSet, ExactRational, Prefix};

/// An open set given by an increasing enumeration `S_0 ⊆ S_1 ⊆ …` of finite
/// prefix sets together with rational approximations of its measure.
pub trait EnumeratedOpenSet<P: Prefix> {
    /// The finite stage `S_m`.
    fn stage(&self, m: u64) -> CylinderSet<P>;

    /// `g(k)` with `|Λ(⟦S⟧) − g(k)| < 2^{−k}`.
    fn measure_approx(&self, k: u32) -> Result<ExactRational, DiagError>;

    /// The whole set, when it is finite and known.
    fn finite(&self) -> Option<&CylinderSet<P>> {
        None
    }
}

/// A finite set seen as an enumeration: stage `m` holds the first `m`
/// members in order, and `g(k)` rounds the exact measure down to a multiple
/// of `2^{−(k+1)}`.
#[derive(Clone, Debug)]
pub struct FiniteOpenSet<P: Prefix> {
    set: CylinderSet<P>,
    members: Vec<P>,
    measure: ExactRational,
}

impl<P: Prefix> FiniteOpenSet<P> {
    pub fn new(set: CylinderSet<P>) -> Self {
        let set = set.normalized();
        let members = set.members().cloned().collect();
        let measure = set.measure();
        Self { set, members, measure }
    }

    pub fn set(&self) -> &CylinderSet<P> {
        &self.set
    }

    pub fn measure(&self) -> &ExactRational {
        &self.measure
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl<P: Prefix> EnumeratedOpenSet<P> for FiniteOpenSet<P> {
    fn stage(&self, m: u64) -> CylinderSet<P> {
        let take = usize::try_from(m).unwrap_or(usize::MAX).min(self.members.len());
        self.members[..take].iter().cloned().collect()
    }

    fn measure_approx(&self, k: u32) -> Result<ExactRational, DiagError> {
        let scale = BigInt::from(1) << (k + 1);
        let scaled = &self.measure * ExactRational::from_integer(scale.clone());
        let floor = scaled.numer().div_floor(scaled.denom());
        Ok(ExactRational::new(floor, scale))
    }

    fn finite(&self) -> Option<&CylinderSet<P>> {
        Some(&self.set)
    }
}

/// `F(t) = Λ(⟦S⟧ ∩ I(t))` for a finite `S`.
pub fn conditional_measure_exact<P: Prefix>(set: &CylinderSet<P>, t: &P) -> ExactRational {
    set.conditional_measure(t)
}

/// Finds the least stage `h` with `Λ(⟦S_h⟧) > g(k) − 2^{−k}`, using the
/// monotonicity of stage measures to gallop and then bisect.
pub(crate) fn approximating_stage<P: Prefix>(
    open: &dyn EnumeratedOpenSet<P>,
    k: u32,
    stage_cap: u64,
) -> Result<(u64, CylinderSet<P>), DiagError> {
    let target = open.measure_approx(k)? - pow2_neg(k as u64);
    let reaches = |m: u64| {
        let s = open.stage(m);
        let ok = s.measure() > target;
        (ok, s)
    };
    let (ok, s) = reaches(0);
    if ok {
        return Ok((0, s));
    }
    let mut low = 0u64;
    let mut high = 1u64;
    let found = loop {
        if high > stage_cap {
            let (ok, s) = reaches(stage_cap);
            if ok {
                break (stage_cap, s);
            }
            return Err(DiagError::StageCapExceeded { precision: k, cap: stage_cap });
        }
        let (ok, s) = reaches(high);
        if ok {
            break (high, s);
        }
        low = high;
        high *= 2;
    };
    let (mut high, mut best) = found;
    while high - low > 1 {
        let mid = low + (high - low) / 2;
        let (ok, s) = reaches(mid);
        if ok {
            high = mid;
            best = s;
        } else {
            low = mid;
        }
    }
    Ok((high, best))
}

/// `f(t,k) = g(k) − Σ_{u ≠ t, |u| = |t|} Λ(⟦S_h⟧ ∩ I(u))` with `h = h(k)`,
/// which lies within `2^{−k}` of `F(t)`. The sum over the other cells of the
/// level equals `Λ(⟦S_h⟧) − Λ(⟦S_h⟧ ∩ I(t))` since the level partitions the space.
pub fn conditional_measure_approx<P: Prefix>(
    open: &dyn EnumeratedOpenSet<P>,
    t: &P,
    k: u32,
    stage_cap: u64,
) -> Result<ExactRational, DiagError> {
    let (_, stage) = approximating_stage(open, k, stage_cap)?;
    let g = open.measure_approx(k)?;
    let others = stage.measure() - stage.conditional_measure(t);
    Ok(g - others)
}
