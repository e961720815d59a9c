use escape_core::measure::text::{parse_set, write_binary_set, write_family_set, AnySet};
use escape_core::measure::{
    monotonicity_check, subadditivity_check, BinaryCylinderSet, BinaryString, EncodingFunction,
    FamilyCylinderSet, FamilyPrefix, Prefix,
};
use num_traits::One;
use proptest::prelude::*;

fn binary_string(max_len: usize) -> impl Strategy<Value = BinaryString> {
    prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(BinaryString::from_bits)
}

fn binary_set() -> impl Strategy<Value = BinaryCylinderSet> {
    prop::collection::vec(binary_string(6), 0..8).prop_map(|v| v.into_iter().collect())
}

fn family_prefix() -> impl Strategy<Value = FamilyPrefix> {
    (0usize..=3, 0u128..2, 0u128..24, 0u128..40320).prop_map(|(len, a, b, c)| {
        let ranks = [a, b, c];
        let entries = (0..len).map(|k| EncodingFunction::from_rank(k as u32 + 1, ranks[k]).unwrap()).collect();
        FamilyPrefix::new(entries).unwrap()
    })
}

fn family_set() -> impl Strategy<Value = FamilyCylinderSet> {
    prop::collection::vec(family_prefix(), 0..6).prop_map(|v| v.into_iter().collect())
}

proptest! {
    #[test]
    fn binary_normalization_keeps_measure(s in binary_set()) {
        let n = s.normalized();
        prop_assert!(n.is_prefix_free());
        prop_assert_eq!(n.measure(), s.measure());
        prop_assert!(s.measure() <= num_rational::BigRational::one());
    }

    #[test]
    fn binary_monotone_and_subadditive(a in binary_set(), b in binary_set()) {
        let union = a.union(&b);
        prop_assert!(monotonicity_check(&a, &union));
        prop_assert!(subadditivity_check(&[a.clone(), b.clone()]));
        prop_assert!(a.intersection(&b).measure() <= a.measure());
        // Inclusion–exclusion holds for finite unions of cells.
        prop_assert_eq!(union.measure() + a.intersection(&b).measure(), a.measure() + b.measure());
    }

    #[test]
    fn binary_disjoint_additivity(a in binary_set()) {
        let left: BinaryCylinderSet = a.members().map(|m| BinaryString::from_bits(vec![false]).concat(m)).collect();
        let right: BinaryCylinderSet = a.members().map(|m| BinaryString::from_bits(vec![true]).concat(m)).collect();
        prop_assert!(left.is_disjoint_from(&right));
        prop_assert_eq!(left.union(&right).measure(), left.measure() + right.measure());
    }

    #[test]
    fn family_axioms(a in family_set(), b in family_set()) {
        prop_assert_eq!(a.normalized().measure(), a.measure());
        let union = a.union(&b);
        prop_assert!(monotonicity_check(&a, &union));
        prop_assert!(subadditivity_check(&[a.clone(), b.clone()]));
        prop_assert_eq!(union.measure() + a.intersection(&b).measure(), a.measure() + b.measure());
    }

    #[test]
    fn conditional_measures_split_over_children(s in binary_set(), t in binary_string(4)) {
        let total = s.conditional_measure(&t);
        let split = s.conditional_measure(&t.child(0)) + s.conditional_measure(&t.child(1));
        prop_assert_eq!(total, split);
    }

    #[test]
    fn text_round_trip(a in binary_set(), b in family_set()) {
        prop_assert_eq!(parse_set(&write_binary_set(&a)).unwrap(), AnySet::Binary(a));
        prop_assert_eq!(parse_set(&write_family_set(&b)).unwrap(), AnySet::Family(b));
    }
}
