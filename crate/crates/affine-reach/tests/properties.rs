//! Cross-module properties checked against independent brute-force
//! ground truth on randomized families.

mod common;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use affine_reach::affine::{
    apply, apply_word, check_witness, is_valid_orbit, AffineSystem, Domain,
};
use affine_reach::automaton::{automaton_to_regex, build_mod_automaton};
use affine_reach::config::Limits;
use affine_reach::monotone::{increase_predicate, valid_increase_predicate, ExtremumMode};
use affine_reach::oracle::{bfs_oracle, random_system, Profile, ProfileClass};
use affine_reach::regex::{eliminate_empty, to_dnf};
use affine_reach::solver::decide;

use common::{accepted_words, clause_union_upto, language_upto, random_reduced};

fn limits() -> Limits {
    Limits::default()
}

/// Closed search for systems whose slopes all have magnitude at least 2:
/// once `|value|` exceeds both the largest offset and `|y|`, magnitudes
/// grow strictly forever, so such values are dead and the window search
/// space is finite. The answer is exact, not bounded.
fn expanding_brute(sys: &AffineSystem) -> bool {
    assert!(sys.maps().iter().all(|f| f.a.abs() >= BigInt::from(2)));
    let dead = sys
        .maps()
        .iter()
        .map(|f| f.b.abs())
        .chain([sys.y.abs()])
        .max()
        .unwrap();
    if sys.x == sys.y {
        return true;
    }
    let natural = sys.domain == Domain::Naturals;
    let mut seen = BTreeSet::new();
    seen.insert(sys.x.clone());
    let mut frontier = vec![sys.x.clone()];
    while let Some(v) = frontier.pop() {
        for f in sys.maps() {
            let w = apply(f, &v);
            if (natural && w.is_negative()) || w.abs() > dead {
                continue;
            }
            if w == sys.y {
                return true;
            }
            if seen.insert(w.clone()) {
                frontier.push(w);
            }
        }
    }
    false
}

#[test]
fn expanding_single_map_systems_match_closed_search_exhaustively() {
    for a in [-3i64, -2, 2, 3] {
        for b in -3..=3i64 {
            for x in -8..=8i64 {
                for y in -8..=8i64 {
                    let sys =
                        AffineSystem::from_i64(&[(a, b)], x, y, Domain::Integers).unwrap();
                    let expected = expanding_brute(&sys);
                    let decision = decide(&sys, &limits()).unwrap();
                    assert_eq!(
                        decision.verdict.reachable, expected,
                        "({a}z+{b}) {x}->{y}"
                    );
                    if let Some(w) = &decision.verdict.witness {
                        assert!(check_witness(&sys, w).unwrap(), "({a}z+{b}) {x}->{y}");
                    }
                }
            }
        }
    }
}

#[test]
fn expanding_pair_systems_match_closed_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for round in 0..400 {
        let domain = if round % 2 == 0 { Domain::Integers } else { Domain::Naturals };
        let draw = |rng: &mut ChaCha8Rng| {
            let mag = rng.gen_range(2..=3i64);
            let a = if rng.gen() { mag } else { -mag };
            (a, rng.gen_range(-3..=3i64))
        };
        let maps = [draw(&mut rng), draw(&mut rng)];
        let lo = if domain == Domain::Naturals { 0 } else { -8 };
        let x = rng.gen_range(lo..=8i64);
        let y = rng.gen_range(lo..=8i64);
        let sys = AffineSystem::from_i64(&maps, x, y, domain).unwrap();
        // over the naturals, negative slopes leave the window discipline;
        // keep this family on the dispatcher's window path
        if domain == Domain::Naturals && maps.iter().any(|&(a, _)| a < 0) {
            continue;
        }
        let expected = expanding_brute(&sys);
        let decision = decide(&sys, &limits()).unwrap();
        assert_eq!(decision.verdict.reachable, expected, "{maps:?} {x}->{y} {domain:?}");
        if let Some(w) = &decision.verdict.witness {
            assert!(check_witness(&sys, w).unwrap());
        }
    }
}

#[test]
fn congruence_pipeline_preserves_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    for _ in 0..120 {
        let n = rng.gen_range(1..=3);
        let maps: Vec<(i64, i64)> = (0..n)
            .map(|_| {
                let a = loop {
                    let a = rng.gen_range(-3..=3i64);
                    if a != 0 {
                        break a;
                    }
                };
                (a, rng.gen_range(-4..=4i64))
            })
            .collect();
        let x = rng.gen_range(-6..=6i64);
        let y = rng.gen_range(-6..=6i64);
        let k = BigInt::from(rng.gen_range(2..=4i64));
        let sys = AffineSystem::from_i64(&maps, x, y, Domain::Integers).unwrap();
        let letters = sys.len();
        let aut = build_mod_automaton(&sys, &k, &limits()).unwrap();
        let by_automaton = accepted_words(letters, 6, |w| aut.accepts(w));
        let r = automaton_to_regex(&aut, &limits()).unwrap();
        assert_eq!(language_upto(&r, 6, &limits()), by_automaton, "{maps:?} mod {k}");
        let cleaned = eliminate_empty(&r);
        assert_eq!(language_upto(&cleaned, 6, &limits()), by_automaton);
        let clauses = if cleaned.is_empty_set() {
            Vec::new()
        } else {
            to_dnf(&cleaned, &limits()).unwrap()
        };
        assert_eq!(clause_union_upto(&clauses, 6, &limits()), by_automaton);
    }
}

#[test]
fn every_profile_agrees_with_the_bounded_oracle() {
    let classes = [
        ProfileClass::Mixed,
        ProfileClass::AllExpanding,
        ProfileClass::WithShift,
        ProfileClass::WithInvolution,
        ProfileClass::TwoInvolutions,
        ProfileClass::WithConstant,
        ProfileClass::ShrinkingNaturals,
    ];
    for (ci, class) in classes.iter().enumerate() {
        for seed in 0..40u64 {
            let domain = if class == &ProfileClass::ShrinkingNaturals || seed % 2 == 1 {
                Domain::Naturals
            } else {
                Domain::Integers
            };
            let mut maps = 1 + seed as usize % 3;
            if *class == ProfileClass::TwoInvolutions {
                maps = maps.max(2);
            }
            let profile = Profile::new(*class, maps, domain);
            let sys = random_system(1000 * ci as u64 + seed, &profile).unwrap();
            let decision = decide(&sys, &limits())
                .unwrap_or_else(|e| panic!("{class:?} seed {seed}: {e}"));
            let oracle = bfs_oracle(&sys, 100_000, 25);
            if let Some(path) = oracle.path() {
                assert!(
                    decision.verdict.reachable,
                    "{class:?} seed {seed}: oracle path {path:?} but verdict unreachable\n{}",
                    decision.verdict.trace.join("\n")
                );
            }
            if decision.verdict.reachable {
                let w = decision
                    .verdict
                    .witness
                    .as_ref()
                    .unwrap_or_else(|| panic!("{class:?} seed {seed}: no witness"));
                assert!(check_witness(&sys, w).unwrap(), "{class:?} seed {seed}: {w:?}");
            }
            if domain == Domain::Naturals && decision.verdict.reachable {
                let wide = AffineSystem::new(
                    sys.maps().to_vec(),
                    sys.x.clone(),
                    sys.y.clone(),
                    Domain::Integers,
                )
                .unwrap();
                assert!(
                    decide(&wide, &limits()).unwrap().verdict.reachable,
                    "{class:?} seed {seed}: reachable over naturals but not integers"
                );
            }
        }
    }
}

#[test]
fn decisions_are_deterministic() {
    for seed in 0..25u64 {
        let profile = Profile::new(ProfileClass::Mixed, 1 + (seed as usize % 3), Domain::Integers);
        let sys = random_system(seed, &profile).unwrap();
        let a = decide(&sys, &limits()).map(|d| format!("{:?} {:?}", d.verdict, d.stats));
        let b = decide(&sys, &limits()).map(|d| format!("{:?} {:?}", d.verdict, d.stats));
        assert_eq!(a.unwrap(), b.unwrap());
    }
}

#[test]
fn predicates_match_brute_force_on_star_free_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfade);
    for _ in 0..200 {
        let maps: Vec<(i64, i64)> = (0..rng.gen_range(1..=2))
            .map(|_| (rng.gen_range(1..=3i64), rng.gen_range(-4..=4i64)))
            .collect();
        let sys = AffineSystem::from_i64(&maps, 0, 0, Domain::Integers).unwrap();
        let len = rng.gen_range(1..=6);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=sys.len())).collect();
        let e = affine_reach::regex::Regex::concat(
            word.iter().map(|&i| affine_reach::regex::Regex::literal(i)).collect(),
        );
        let w = affine_reach::affine::Word::new(word);
        for z in -5..=5i64 {
            let z = BigInt::from(z);
            let (end, _) = apply_word(&sys, &w, &z).unwrap();
            assert_eq!(
                increase_predicate(&z, &e, &sys, ExtremumMode::Sup).unwrap(),
                end > z,
                "{e} at {z}"
            );
            assert_eq!(
                increase_predicate(&z, &e, &sys, ExtremumMode::Inf).unwrap(),
                end < z
            );
            if !z.is_negative() {
                let valid = is_valid_orbit(&sys, &w, &z).unwrap();
                assert_eq!(
                    valid_increase_predicate(&z, &e, &sys).unwrap(),
                    valid && end > z,
                    "{e} at {z}"
                );
            }
        }
    }
}

#[test]
fn starred_predicates_see_every_brute_force_improvement() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbead);
    for _ in 0..150 {
        let maps: Vec<(i64, i64)> = (0..2)
            .map(|_| (rng.gen_range(1..=3i64), rng.gen_range(-4..=4i64)))
            .collect();
        let sys = AffineSystem::from_i64(&maps, 0, 0, Domain::Integers).unwrap();
        let e = random_reduced(&mut rng, sys.len(), 8);
        let words = language_upto(&e, 12, &limits());
        for z in -4..=4i64 {
            let z = BigInt::from(z);
            let brute_up = words
                .iter()
                .any(|w| apply_word(&sys, w, &z).unwrap().0 > z);
            if brute_up {
                assert!(
                    increase_predicate(&z, &e, &sys, ExtremumMode::Sup).unwrap(),
                    "{e} at {z}: brute found an increase"
                );
            }
            if !z.is_negative() {
                let brute_valid = words.iter().any(|w| {
                    is_valid_orbit(&sys, w, &z).unwrap()
                        && apply_word(&sys, w, &z).unwrap().0 > z
                });
                if brute_valid {
                    assert!(valid_increase_predicate(&z, &e, &sys).unwrap(), "{e} at {z}");
                }
            }
        }
    }
}
