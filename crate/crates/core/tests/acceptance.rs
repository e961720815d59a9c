//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use escape_core::bounds::{
    dlog_schedule, markov_exceed_count, power_threshold_check, tail_bound_check, EscapeSchedule, Schedule,
};
use escape_core::diag::{
    assemble_open_set, build_ggm_testfamily, conditional_measure_approx, conditional_measure_exact,
    escape, escape_family, toy_registry, verify_escape, AssemblyConfig, EnumeratedOpenSet, EscapeConfig,
    FiniteOpenSet, GgmTestFamily,
};
use escape_core::ggm::{
    builtin, dlog_success_ggm, linear_search, minimal_shoup_constant, shoup_audit, GenericProgram, Mode,
};
use escape_core::measure::{
    monotonicity_check, pow2_neg, ratio, subadditivity_check, BinaryCylinderSet, BinaryString, CylinderSet,
    EncodingFunction, ExactRational, FamilyCylinderSet, FamilyPrefix, Prefix,
};
use escape_core::rom::{build_constraint_strings, rom_testset_measure, EllPolynomial, OracleTable};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_binary(rng: &mut ChaCha8Rng, max_members: usize, max_len: usize) -> BinaryCylinderSet {
    (0..rng.gen_range(0..=max_members))
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            BinaryString::from_bits((0..len).map(|_| rng.gen()).collect())
        })
        .collect()
}

fn random_family_prefix(rng: &mut ChaCha8Rng, max_len: usize) -> FamilyPrefix {
    let len = rng.gen_range(1..=max_len);
    let entries = (1..=len as u32)
        .map(|w| {
            let count: u128 = (1..=(1u128 << w)).product();
            EncodingFunction::from_rank(w, rng.gen_range(0..count)).unwrap()
        })
        .collect();
    FamilyPrefix::new(entries).unwrap()
}

fn random_family(rng: &mut ChaCha8Rng, max_members: usize, max_len: usize) -> FamilyCylinderSet {
    (0..rng.gen_range(0..=max_members)).map(|_| random_family_prefix(rng, max_len)).collect()
}

fn axioms<P: Prefix>(a: &CylinderSet<P>, b: &CylinderSet<P>, left: &CylinderSet<P>, right: &CylinderSet<P>) -> Result<(), String> {
    ensure(a.normalized().measure() == a.measure(), || format!("normalization changed the measure of {a:?}"))?;
    ensure(monotonicity_check(a, &a.union(b)), || format!("monotonicity failed for {a:?}"))?;
    ensure(subadditivity_check(&[a.clone(), b.clone()]), || format!("subadditivity failed for {a:?}, {b:?}"))?;
    ensure(left.is_disjoint_from(right), || "constructed sets overlap".into())?;
    ensure(left.union(right).measure() == left.measure() + right.measure(), || {
        format!("disjoint additivity failed for {left:?}, {right:?}")
    })
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let a = random_binary(&mut rng, 8, 7);
        let b = random_binary(&mut rng, 8, 7);
        let left: BinaryCylinderSet = a.members().map(|m| BinaryString::from_bits(vec![false]).concat(m)).collect();
        let right: BinaryCylinderSet = b.members().map(|m| BinaryString::from_bits(vec![true]).concat(m)).collect();
        axioms(&a, &b, &left, &right)?;
    }
    for _ in 0..1000 {
        let a = random_family(&mut rng, 6, 3);
        let b = random_family(&mut rng, 6, 3);
        let first = |s: &FamilyCylinderSet, rank: u128| -> FamilyCylinderSet {
            s.members().filter(|m| m.entries()[0].rank() == rank).cloned().collect()
        };
        axioms(&a, &b, &first(&a, 0), &first(&b, 1))?;
    }
    Ok("1000 binary and 1000 family set pairs".into())
}

fn criterion_2() -> Outcome {
    let c0 = builtin("const_guess(0)").unwrap().program;
    let at2 = dlog_success_ggm(&c0, 2, Mode::default()).map_err(|e| e.to_string())?.success_probability;
    let at3 = dlog_success_ggm(&c0, 3, Mode::default()).map_err(|e| e.to_string())?.success_probability;
    ensure(at2 == ratio(5, 12), || format!("const_guess(0) at n=2 gave {at2}"))?;
    ensure(at3 == ratio(6, 35), || format!("const_guess(0) at n=3 gave {at3}"))?;
    for (p, n) in [(2u64, 2u32), (3, 2), (5, 3), (7, 3)] {
        for m in 1..=p {
            let audit = shoup_audit(&linear_search(m).program, n, p, &ExactRational::one(), 3).map_err(|e| e.to_string())?;
            let expected = ratio((m + 1).min(p) as i64, p as i64);
            ensure(audit.success == expected, || format!("linear_search({m}) at p={p}: {} != {expected}", audit.success))?;
        }
    }
    Ok(format!("const_guess(0): {at2} (n=2), {at3} (n=3); linear_search matches min(m+1,p)/p"))
}

fn criterion_3() -> Outcome {
    let four = ratio(4, 1);
    let mut worst = ExactRational::zero();
    for (p, n) in [(2u64, 2u32), (3, 2), (5, 3), (7, 3)] {
        let programs: Vec<GenericProgram> = (1..p).map(|m| linear_search(m).program).collect();
        for prog in &programs {
            let audit = shoup_audit(prog, n, p, &four, 3).map_err(|e| e.to_string())?;
            ensure(audit.holds, || format!("{} at p={p}: {} > {}", prog.name, audit.success, audit.bound))?;
        }
        let c = minimal_shoup_constant(&programs, &[(n, p)], 3).map_err(|e| e.to_string())?;
        worst = worst.max(c);
    }
    Ok(format!("4·m²/p holds; minimal constant over the grid = {worst}"))
}

fn criterion_4() -> Outcome {
    for k in 1..=3u64 {
        for d in 2..=4u64 {
            let f = dlog_schedule(k, d, 1);
            let start: u64 = f.clone().try_into().unwrap();
            for n in start..=start + 50 {
                // n^{2k+1} / 2^n ≤ n^{−d}  ⇔  n^{2k+1+d} ≤ 2^n.
                let lhs = BigUint::from(n).pow((2 * k + 1 + d) as u32);
                ensure(lhs <= BigUint::one() << n, || format!("fails at k={k}, d={d}, n={n} (f={f})"))?;
            }
        }
    }
    Ok("(k,d) ∈ {1,2,3}×{2,3,4}, 51 values of n each".into())
}

fn criterion_5() -> Outcome {
    let one = EllPolynomial::constant(1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for q in 1..=2u32 {
        for n in 1..=2u64 {
            let tables: Vec<OracleTable> = OracleTable::all(n, q, 1, 1 << 10).map_err(|e| e.to_string())?.collect();
            for _ in 0..50 {
                let bad: Vec<OracleTable> = tables.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
                let set = build_constraint_strings(n, q, &one, &bad).map_err(|e| e.to_string())?;
                let closed = rom_testset_measure(n, q, &one, &BigUint::from(bad.len())).map_err(|e| e.to_string())?;
                ensure(set.measure() == closed, || format!("q={q} n={n}: {} != {closed}", set.measure()))?;
                if q == 1 {
                    let strings = set.materialize(1 << 14).map_err(|e| e.to_string())?;
                    ensure(strings.measure() == closed, || format!("materialised measure differs at n={n}"))?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} bad-table sets"))
}

fn escape_checks<P: Prefix>(set: &CylinderSet<P>, depth: usize) -> Result<(), String> {
    let open = FiniteOpenSet::new(set.clone());
    let exact = escape(&open, depth, &EscapeConfig::default()).map_err(|e| e.to_string())?;
    let approx = escape(&open, depth, &EscapeConfig::approx()).map_err(|e| e.to_string())?;
    ensure(exact.invariant_holds() && approx.invariant_holds(), || format!("invariant broken for {set:?}"))?;
    ensure(verify_escape(&exact.prefix, set), || format!("exact escape {} lands in the set", exact.prefix))?;
    ensure(verify_escape(&approx.prefix, set), || format!("approx escape {} lands in the set", approx.prefix))?;
    ensure(exact.prefix == approx.prefix, || format!("modes disagree: {} vs {}", exact.prefix, approx.prefix))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut binary = 0;
    while binary < 500 {
        let s = random_binary(&mut rng, 12, 8);
        if s.measure() < ExactRational::one() {
            escape_checks(&s, rng.gen_range(1..=10))?;
            binary += 1;
        }
    }
    let mut family = 0;
    while family < 110 {
        let depth = if family < 100 { 2 } else { 3 };
        let s = random_family(&mut rng, 10, depth);
        if s.measure() < ExactRational::one() {
            escape_checks(&s, depth)?;
            family += 1;
        }
    }
    Ok("500 binary, 100 family (depth 2) and 10 family (depth 3) sets".into())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let s = random_binary(&mut rng, 10, 8);
        let open = FiniteOpenSet::new(s.clone());
        let t = BinaryString::from_bits((0..rng.gen_range(0..5)).map(|_| rng.gen()).collect());
        let exact = conditional_measure_exact(&s, &t);
        for k in 0..=20 {
            let approx = conditional_measure_approx(&open, &t, k, 1 << 20).map_err(|e| e.to_string())?;
            ensure((approx - &exact).abs() < pow2_neg(k as u64), || format!("k={k}, t={t}, S={s:?}"))?;
        }
    }
    // Pipeline instance: a family lies in ⟦C⟧ iff its second entry is bad for
    // program 1 at n = 2 or its third entry is bad at n = 3.
    let family = GgmTestFamily::new(toy_registry(), 3);
    let open = assemble_open_set(&family, &AssemblyConfig::new(EscapeSchedule::Compressed { offset: 1 }))
        .map_err(|e| e.to_string())?;
    let registry = toy_registry();
    let bad2 = build_ggm_testfamily(&registry[0], 2, 2, 3).map_err(|e| e.to_string())?;
    let bad3a = build_ggm_testfamily(&registry[0], 2, 3, 3).map_err(|e| e.to_string())?;
    let bad3b = build_ggm_testfamily(&registry[1], 2, 3, 3).map_err(|e| e.to_string())?;
    let mut third: Vec<&EncodingFunction> = bad3a.bad_encodings().iter().chain(bad3b.bad_encodings()).collect();
    third.sort();
    third.dedup();
    let a = ratio(bad2.bad_encodings().len() as i64, 24);
    let b = ratio(third.len() as i64, 40320);
    let brute = ExactRational::one() - (ExactRational::one() - a) * (ExactRational::one() - b);
    ensure(*open.measure() == brute, || format!("assembled measure {} vs brute force {brute}", open.measure()))?;
    for k in 0..=20 {
        let g = open.measure_approx(k).map_err(|e| e.to_string())?;
        ensure((&brute - g).abs() <= pow2_neg(k as u64), || format!("g({k}) too far from {brute}"))?;
    }
    Ok(format!("200 finite instances; pipeline measure {brute}"))
}

fn criterion_8() -> Outcome {
    let family = GgmTestFamily::new(toy_registry(), 3);
    let open = assemble_open_set(&family, &AssemblyConfig::new(EscapeSchedule::Compressed { offset: 1 }))
        .map_err(|e| e.to_string())?;
    let pieces = open.pieces().filter(|p| p.members > 0).count();
    ensure(pieces > 0, || "compressed schedule met no nonempty constraint set".into())?;
    let t = escape_family(&open, 3, &EscapeConfig::default()).map_err(|e| e.to_string())?;
    for (r, set) in open.piece_sets() {
        ensure(verify_escape(&t.prefix, set), || format!("escape lands in C_{{{},{},{}}}", r.i, r.d, r.n))?;
    }
    let approx = escape_family(&open, 3, &EscapeConfig::approx()).map_err(|e| e.to_string())?;
    ensure(approx.prefix == t.prefix, || "approx pipeline escape differs".into())?;

    let paper = assemble_open_set(&family, &AssemblyConfig::new(EscapeSchedule::Paper(Schedule::DlogPaper { shoup_constant: 1 })))
        .map_err(|e| e.to_string())?;
    ensure(paper.is_vacuous(), || "default schedule produced a nonempty set below the horizon".into())?;
    let vacuous = escape_family(&paper, 3, &EscapeConfig::default()).map_err(|e| e.to_string())?;
    ensure(vacuous.initial.is_zero(), || "vacuous escape saw positive measure".into())?;
    Ok(format!("escaped {pieces} nonempty sets with {}; default schedule vacuous", t.prefix))
}

fn criterion_9() -> Outcome {
    for d in 2..=5 {
        for n in 1..=100 {
            let r = tail_bound_check(n, d, 100).map_err(|e| e.to_string())?;
            ensure(r.holds, || format!("tail bound fails at n={n}, d={d}"))?;
        }
    }
    for d in 4..=6 {
        ensure(power_threshold_check(d, 300).map_err(|e| e.to_string())?, || format!("power check fails at d={d}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let values: Vec<ExactRational> =
            (0..rng.gen_range(1..12)).map(|_| ratio(rng.gen_range(0..=20), 20)).collect();
        let epsilon = ratio(rng.gen_range(1..=20), 20);
        let alpha = ratio(rng.gen_range(1..=40), 4);
        let r = markov_exceed_count(&values, &epsilon, &alpha).map_err(|e| e.to_string())?;
        // Direct recount, independent of the report.
        let count = values.iter().filter(|v| **v > &alpha * &epsilon).count();
        let mean: ExactRational = values.iter().sum::<ExactRational>() / BigInt::from(values.len());
        let expected = mean > epsilon || ExactRational::from_integer(count.into()) < ExactRational::from_integer(values.len().into()) / &alpha;
        ensure(r.count == count && r.holds == expected && r.holds, || format!("markov case {values:?} ε={epsilon} α={alpha}"))?;
    }
    Ok("tail d∈[2,5] n∈[1,100]; power d∈[4,6] to 300; 10000 Markov cases".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("measure axioms", criterion_1),
        ("DLog exact values", criterion_2),
        ("Shoup audit", criterion_3),
        ("schedule inequality chain", criterion_4),
        ("ROM measure identity", criterion_5),
        ("escape correctness", criterion_6),
        ("approximation tower", criterion_7),
        ("end-to-end pipeline", criterion_8),
        ("lemma checks", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.2}s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.2}s]: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
