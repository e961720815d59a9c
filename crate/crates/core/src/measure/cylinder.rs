use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::Hash;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::encoding::{encf_count, EncodingFunction};
use super::family::FamilyPrefix;
use super::rational::{pow2_neg, ExactRational};
use super::string::BinaryString;

/// A finite prefix naming a basic open cell `I(t)` of a product space.
///
/// All cells at the same depth have the same volume, and the children of a
/// cell partition it.
pub trait Prefix: Clone + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync {
    fn root() -> Self;
    fn depth(&self) -> usize;
    fn truncated(&self, depth: usize) -> Self;
    fn is_prefix_of(&self, other: &Self) -> bool;
    fn volume_at_depth(depth: usize) -> ExactRational;

    /// Number of children of any cell at `depth`, if it fits in 128 bits.
    fn child_count_at_depth(depth: usize) -> Option<u128>;
    /// The `index`-th child in tie-break order.
    fn child(&self, index: u128) -> Self;
    /// Inverse of [`Prefix::child`]: where the last coordinate sits among its siblings.
    fn child_index(&self) -> u128;

    fn cell_volume(&self) -> ExactRational {
        Self::volume_at_depth(self.depth())
    }
}

impl Prefix for BinaryString {
    fn root() -> Self {
        BinaryString::empty()
    }
    fn depth(&self) -> usize {
        self.len()
    }
    fn truncated(&self, depth: usize) -> Self {
        self.slice(0, depth.min(self.len()))
    }
    fn is_prefix_of(&self, other: &Self) -> bool {
        other.bits().starts_with(self.bits())
    }
    fn volume_at_depth(depth: usize) -> ExactRational {
        pow2_neg(depth as u64)
    }
    fn child_count_at_depth(_depth: usize) -> Option<u128> {
        Some(2)
    }
    fn child(&self, index: u128) -> Self {
        self.with_bit(index == 1)
    }
    fn child_index(&self) -> u128 {
        self.bits().last().map_or(0, |&b| b as u128)
    }
}

impl Prefix for FamilyPrefix {
    fn root() -> Self {
        FamilyPrefix::empty()
    }
    fn depth(&self) -> usize {
        self.len()
    }
    fn truncated(&self, depth: usize) -> Self {
        FamilyPrefix::truncated(self, depth)
    }
    fn is_prefix_of(&self, other: &Self) -> bool {
        FamilyPrefix::is_prefix_of(self, other)
    }
    /// `Π_{k=1}^{depth} 1/(2^k)!`, memoised.
    fn volume_at_depth(depth: usize) -> ExactRational {
        static CACHE: OnceLock<Mutex<Vec<ExactRational>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(vec![ExactRational::one()]));
        let mut cache = cache.lock().expect("volume cache poisoned");
        while cache.len() <= depth {
            let k = cache.len() as u32;
            let next = cache.last().unwrap() / BigRational::from_integer(BigInt::from(encf_count(k)));
            cache.push(next);
        }
        cache[depth].clone()
    }
    fn child_count_at_depth(depth: usize) -> Option<u128> {
        let width = depth + 1;
        if width > 5 {
            return None;
        }
        Some((1..=(1u128 << width)).product())
    }
    fn child(&self, index: u128) -> Self {
        let width = self.len() as u32 + 1;
        let next = EncodingFunction::from_rank(width, index).expect("child index in range");
        self.extended(next).expect("width matches depth")
    }
    fn child_index(&self) -> u128 {
        self.last().map_or(0, EncodingFunction::rank)
    }
}

/// A finite set of prefixes denoting the open set `⟦S⟧ = ⋃_{s∈S} I(s)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CylinderSet<P: Prefix> {
    members: BTreeSet<P>,
}

pub type BinaryCylinderSet = CylinderSet<BinaryString>;
pub type FamilyCylinderSet = CylinderSet<FamilyPrefix>;

impl<P: Prefix> Default for CylinderSet<P> {
    fn default() -> Self {
        Self { members: BTreeSet::new() }
    }
}

impl<P: Prefix> FromIterator<P> for CylinderSet<P> {
    fn from_iter<I: IntoIterator<Item = P>>(iter: I) -> Self {
        Self { members: iter.into_iter().collect() }
    }
}

impl<P: Prefix> fmt::Debug for CylinderSet<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl<P: Prefix> CylinderSet<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, p: P) -> bool {
        self.members.insert(p)
    }

    pub fn extend(&mut self, other: &CylinderSet<P>) {
        self.members.extend(other.members.iter().cloned());
    }

    pub fn members(&self) -> impl Iterator<Item = &P> + '_ {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &P) -> bool {
        self.members.contains(p)
    }

    pub fn max_depth(&self) -> usize {
        self.members.iter().map(Prefix::depth).max().unwrap_or(0)
    }

    fn has_proper_prefix_of(&self, p: &P) -> bool {
        (0..p.depth()).any(|d| self.members.contains(&p.truncated(d)))
    }

    pub fn is_prefix_free(&self) -> bool {
        self.members.iter().all(|p| !self.has_proper_prefix_of(p))
    }

    /// Deletes every member that has a proper prefix in the set; the open set
    /// is unchanged.
    pub fn normalized(&self) -> Self {
        self.members.iter().filter(|p| !self.has_proper_prefix_of(p)).cloned().collect()
    }

    /// True iff some member is a prefix of `p`, i.e. every point of `I(p)` lies in ⟦S⟧
    /// because of a single member.
    pub fn covers_prefix(&self, p: &P) -> bool {
        (0..=p.depth()).any(|d| self.members.contains(&p.truncated(d)))
    }

    /// Lebesgue outer measure of ⟦S⟧: the sum of cell volumes over the
    /// normalised set.
    pub fn measure(&self) -> ExactRational {
        let mut by_depth: BTreeMap<usize, u64> = BTreeMap::new();
        for p in self.members.iter().filter(|p| !self.has_proper_prefix_of(p)) {
            *by_depth.entry(p.depth()).or_default() += 1;
        }
        by_depth.into_iter().fold(ExactRational::zero(), |acc, (depth, count)| {
            acc + P::volume_at_depth(depth) * BigRational::from_integer(BigInt::from(count))
        })
    }

    /// A set denoting `⟦S⟧ ∩ I(t)`: `{t}` if some member is a prefix of `t`,
    /// together with every member that extends `t`.
    pub fn intersect_with_cell(&self, t: &P) -> Self {
        let mut out: CylinderSet<P> =
            self.members.iter().filter(|s| t.is_prefix_of(s)).cloned().collect();
        if self.covers_prefix(t) {
            out.insert(t.clone());
        }
        out
    }

    /// `Λ(⟦S⟧ ∩ I(t))`.
    pub fn conditional_measure(&self, t: &P) -> ExactRational {
        self.intersect_with_cell(t).measure()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.members.union(&other.members).cloned().collect()
    }

    /// A set denoting `⟦S⟧ ∩ ⟦T⟧`: for every comparable pair keep the longer one.
    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = CylinderSet::new();
        for a in &self.members {
            for b in &other.members {
                if a.is_prefix_of(b) {
                    out.insert(b.clone());
                } else if b.is_prefix_of(a) {
                    out.insert(a.clone());
                }
            }
        }
        out
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    /// `⟦other⟧ ⊆ ⟦self⟧`, decided cell by cell: a cell is covered by a finite
    /// union of cells iff the conditional measure equals its volume.
    pub fn contains_open_set(&self, other: &Self) -> bool {
        other.members.iter().all(|s| self.covers_prefix(s) || self.conditional_measure(s) == s.cell_volume())
    }
}

/// `⟦small⟧ ⊆ ⟦large⟧ ⇒ Λ(⟦small⟧) ≤ Λ(⟦large⟧)`, checked exactly.
pub fn monotonicity_check<P: Prefix>(small: &CylinderSet<P>, large: &CylinderSet<P>) -> bool {
    !large.contains_open_set(small) || small.measure() <= large.measure()
}

/// `Λ(⋃ S_i) ≤ Σ Λ(S_i)`, with equality when the `⟦S_i⟧` are pairwise disjoint.
pub fn subadditivity_check<P: Prefix>(sets: &[CylinderSet<P>]) -> bool {
    let union = sets.iter().fold(CylinderSet::new(), |acc, s| acc.union(s));
    let total: ExactRational = sets.iter().map(CylinderSet::measure).sum();
    let lhs = union.measure();
    if lhs > total {
        return false;
    }
    let disjoint = sets
        .iter()
        .enumerate()
        .all(|(i, a)| sets[i + 1..].iter().all(|b| a.is_disjoint_from(b)));
    !disjoint || lhs == total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ratio;

    fn bset(xs: &[&str]) -> BinaryCylinderSet {
        xs.iter().map(|x| x.parse().unwrap()).collect()
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(bset(&["0", "01"]).normalized(), bset(&["0"]));
        assert_eq!(bset(&["λ", "1"]).normalized(), bset(&["λ"]));
        let full = bset(&["00", "01", "10", "11"]);
        assert_eq!(full.normalized(), full);
        assert!(full.is_prefix_free());
        assert!(!bset(&["0", "01"]).is_prefix_free());
    }

    #[test]
    fn binary_measure_examples() {
        assert_eq!(bset(&[]).measure(), ratio(0, 1));
        assert_eq!(bset(&["λ"]).measure(), ratio(1, 1));
        assert_eq!(bset(&["0", "10"]).measure(), ratio(3, 4));
        assert_eq!(bset(&["0", "01", "011"]).measure(), ratio(1, 2));
    }

    #[test]
    fn family_cell_volumes() {
        assert_eq!(FamilyPrefix::empty().cell_volume(), ratio(1, 1));
        let one = FamilyPrefix::new(vec![EncodingFunction::identity(1)]).unwrap();
        assert_eq!(one.cell_volume(), ratio(1, 2));
        let two = one.extended(EncodingFunction::identity(2)).unwrap();
        assert_eq!(two.cell_volume(), ratio(1, 48));
    }

    #[test]
    fn family_measure_examples() {
        let empty = FamilyCylinderSet::new();
        assert_eq!(empty.measure(), ratio(0, 1));
        let root: FamilyCylinderSet = [FamilyPrefix::empty()].into_iter().collect();
        assert_eq!(root.measure(), ratio(1, 1));
        let both: FamilyCylinderSet = EncodingFunction::all(1)
            .map(|e| FamilyPrefix::new(vec![e]).unwrap())
            .collect();
        assert_eq!(both.measure(), ratio(1, 1));
    }

    #[test]
    fn intersect_with_cell_examples() {
        let t00: BinaryString = "00".parse().unwrap();
        let t0: BinaryString = "0".parse().unwrap();
        assert_eq!(bset(&["0"]).intersect_with_cell(&t00), bset(&["00"]));
        assert_eq!(bset(&["00", "11"]).intersect_with_cell(&t0), bset(&["00"]));
        assert!(bset(&["11"]).intersect_with_cell(&t0).is_empty());
    }

    #[test]
    fn measure_check_examples() {
        assert!(subadditivity_check(&[bset(&["0"]), bset(&["1"])]));
        assert_eq!(bset(&["0", "1"]).measure(), ratio(1, 1));
        assert!(subadditivity_check(&[bset(&["0"]), bset(&["01"])]));
        assert_eq!(bset(&["0"]).union(&bset(&["01"])).measure(), ratio(1, 2));
        assert!(subadditivity_check::<BinaryString>(&[bset(&[]), bset(&[])]));
        assert!(monotonicity_check(&bset(&["01"]), &bset(&["0"])));
    }

    #[test]
    fn containment_uses_finer_cells() {
        assert!(bset(&["00", "01"]).contains_open_set(&bset(&["0"])));
        assert!(!bset(&["00"]).contains_open_set(&bset(&["0"])));
    }

    #[test]
    fn family_children_follow_lexicographic_order() {
        let root = FamilyPrefix::empty();
        assert_eq!(FamilyPrefix::child_count_at_depth(0), Some(2));
        assert_eq!(FamilyPrefix::child_count_at_depth(1), Some(24));
        let c = root.child(1);
        assert_eq!(c.entries()[0].table(), &[1, 0]);
        assert_eq!(c.child_index(), 1);
        assert_eq!(c.child(23).child_index(), 23);
    }
}
