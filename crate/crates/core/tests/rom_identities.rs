use escape_core::bounds::cantor_unpair;
use escape_core::measure::{BinaryString, Prefix};
use escape_core::rom::{
    build_constraint_strings, build_rom_testfamily, extract_block, layout_position, rom_testset_measure,
    solovay_to_ml, sigforge_toy, Adversary, EllPolynomial, ExperimentOracle, OracleTable, ToyFdhOracle,
};
use num_bigint::BigUint;
use num_bigint::BigInt;
use num_traits::Pow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn blocks_tile_the_sequence_without_overlap() {
    for ell in [EllPolynomial::constant(1), "1,1".parse().unwrap(), "2,0,1".parse().unwrap()] {
        // Walking k in order, block b(k) must start exactly where b(k−1) ended.
        let mut expected_start = 0;
        for k in 0..1000u64 {
            let (n, j) = cantor_unpair(k);
            let start = layout_position(n, j, &ell).unwrap();
            assert_eq!(start, expected_start, "{ell} ({n},{j})");
            expected_start = start + ell.eval(n).unwrap();
        }
    }
}

#[test]
fn extract_reads_the_block_at_its_layout_position() {
    let ell: EllPolynomial = "1,1".parse().unwrap();
    let flat = BinaryString::from_bits((0..200).map(|i| i % 3 == 0).collect());
    let block = extract_block(&flat, 1, 1, &ell).unwrap();
    assert_eq!(block, flat.slice(7, 9));
}

#[test]
fn measure_identity_for_every_bad_set_at_q1() {
    let one = EllPolynomial::constant(1);
    for n in 1..=2 {
        let tables: Vec<_> = OracleTable::all(n, 1, 1, 8).unwrap().collect();
        for mask in 0u32..256 {
            let bad: Vec<_> = tables.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| t.clone()).collect();
            let set = build_constraint_strings(n, 1, &one, &bad).unwrap();
            let closed = rom_testset_measure(n, 1, &one, &BigUint::from(bad.len())).unwrap();
            assert_eq!(set.measure(), closed);
            if mask % 37 == 0 {
                let strings = set.materialize(1 << 16).unwrap();
                assert!(strings.is_prefix_free());
                assert_eq!(strings.measure(), closed);
                assert_eq!(BigUint::from(strings.len()), set.string_count());
            }
        }
    }
}

#[test]
fn two_tables_have_disjoint_patterns() {
    let one = EllPolynomial::constant(1);
    let a = OracleTable::from_index(1, 1, 1, 2).unwrap();
    let b = OracleTable::from_index(1, 1, 1, 6).unwrap();
    let sa = build_constraint_strings(1, 1, &one, &[a.clone()]).unwrap().materialize(1 << 10).unwrap();
    let sb = build_constraint_strings(1, 1, &one, &[b.clone()]).unwrap().materialize(1 << 10).unwrap();
    assert!(sa.is_disjoint_from(&sb));
    let both = build_constraint_strings(1, 1, &one, &[a, b]).unwrap();
    assert_eq!(both.measure(), sa.measure() * BigInt::from(2));
}

#[test]
fn membership_matches_oracle_success() {
    let one = EllPolynomial::constant(1);
    let oracle = ToyFdhOracle { adversary: Adversary::CollisionOnly, depth: 1 };
    let n = 2u64;
    let d = 2u32;
    let set = build_rom_testfamily(&oracle, &one, d, n, 1 << 10).unwrap();
    let threshold = escape_core::ExactRational::new(1.into(), BigInt::from(n).pow(d));
    let len = set.total_length() as usize;
    assert_eq!(len, 13);
    for v in 0..1u64 << len {
        let seq = BinaryString::from_u64(v, len);
        let values = (0..3).map(|j| extract_block(&seq, n, j, &one).unwrap()).collect();
        let table = OracleTable::new(n, 1, values).unwrap();
        let bad = oracle.success(n, &table).unwrap() > threshold;
        assert_eq!(set.contains_sequence(&seq).unwrap(), bad);
    }
}

#[test]
fn forging_probabilities_stay_in_range() {
    for width in 1..=3u32 {
        for table in OracleTable::all(1, 1, width, 1 << 12).unwrap().step_by(7) {
            for adversary in Adversary::ALL {
                let p = sigforge_toy(&table, adversary).unwrap();
                assert!(p >= escape_core::ExactRational::from_integer(0.into()));
                assert!(p <= escape_core::ExactRational::from_integer(1.into()));
            }
        }
    }
}

#[test]
fn solovay_truncations_are_monotone_and_subadditive() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let family: Vec<escape_core::BinaryCylinderSet> = (0..10)
        .map(|k| {
            (0..rng.gen_range(0..3))
                .map(|_| BinaryString::from_u64(rng.gen_range(0..1 << (k + 3)), k + 3))
                .collect()
        })
        .collect();
    let get = |k: u64| family[k as usize].clone();
    let mut previous = escape_core::ExactRational::from_integer(0.into());
    for k_max in 2..10 {
        let c = solovay_to_ml(get, 2, k_max).unwrap();
        let m = c.measure();
        assert!(m >= previous);
        let sum: escape_core::ExactRational = (2..=k_max).map(|k| family[k as usize].measure()).sum();
        assert!(m <= sum);
        previous = m;
        assert!(c.members().all(|s| s.depth() >= 5));
    }
}
