//! Helpers shared by the integration suites: closed brute-force searches,
//! bounded language enumeration, and random reduced-expression generators.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

use affine_reach::affine::{apply, AffineSystem, Domain, Word};
use affine_reach::config::Limits;
use affine_reach::regex::{enumerate_language, Clause, Regex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Breadth-first search over values with explicit closure tracking.
///
/// `Some(true)`: the target was found. `Some(false)`: the search space was
/// exhausted without clipping, so the target is genuinely unreachable.
/// `None`: the search was clipped by the value or node cap and says
/// nothing.
pub fn closed_brute(sys: &AffineSystem, value_cap: u64, node_cap: usize) -> Option<bool> {
    if sys.x == sys.y {
        return Some(true);
    }
    let cap = BigInt::from(value_cap);
    let natural = sys.domain == Domain::Naturals;
    let mut seen: BTreeSet<BigInt> = BTreeSet::new();
    seen.insert(sys.x.clone());
    let mut frontier = vec![sys.x.clone()];
    let mut clipped = false;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in &frontier {
            for f in sys.maps() {
                let w = apply(f, v);
                if natural && w.is_negative() {
                    continue;
                }
                if w.abs() > cap {
                    clipped = true;
                    continue;
                }
                if !seen.insert(w.clone()) {
                    continue;
                }
                if w == sys.y {
                    return Some(true);
                }
                if seen.len() > node_cap {
                    return None;
                }
                next.push(w);
            }
        }
        frontier = next;
    }
    if clipped {
        None
    } else {
        Some(false)
    }
}

/// Every value reachable by a word of length at most `depth` that is
/// congruent to `sys.y` modulo `|k|`, keeping `|value| <= value_cap`.
/// With `valid` set, only nonnegative-orbit words count.
pub fn congruent_values(
    sys: &AffineSystem,
    k: &BigInt,
    depth: usize,
    value_cap: u64,
    valid: bool,
) -> BTreeSet<BigInt> {
    let modulus = k.abs();
    let cap = BigInt::from(value_cap);
    let target = sys.y.mod_floor(&modulus);
    let mut found = BTreeSet::new();
    let mut consider = |v: &BigInt| {
        if v.mod_floor(&modulus) == target {
            found.insert(v.clone());
        }
    };
    // validity only constrains the orbit so far; dedup must keep the
    // validity flag separate
    let mut layer: Vec<(BigInt, bool)> = vec![(sys.x.clone(), !sys.x.is_negative())];
    if !valid || layer[0].1 {
        consider(&sys.x);
    }
    let mut seen: BTreeSet<(BigInt, bool)> = layer.iter().cloned().collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for (v, ok) in &layer {
            for f in sys.maps() {
                let w = apply(f, v);
                if w.abs() > cap {
                    continue;
                }
                let w_ok = *ok && !w.is_negative();
                if valid && !w_ok {
                    continue;
                }
                if !seen.insert((w.clone(), w_ok)) {
                    continue;
                }
                consider(&w);
                next.push((w, w_ok));
            }
        }
        layer = next;
    }
    found
}

/// All words over letters `1..=letters` of length at most `max_len`
/// accepted by the given predicate.
pub fn accepted_words(
    letters: usize,
    max_len: usize,
    mut accepts: impl FnMut(&Word) -> bool,
) -> BTreeSet<Word> {
    let mut out = BTreeSet::new();
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for len in 0..=max_len {
        for seq in &layer {
            let w = Word::new(seq.clone());
            if accepts(&w) {
                out.insert(w);
            }
        }
        if len == max_len {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|seq| {
                (1..=letters).map(move |i| {
                    let mut s = seq.clone();
                    s.push(i);
                    s
                })
            })
            .collect();
    }
    out
}

/// The language of a regex up to `max_len`, as a set of words.
pub fn language_upto(r: &Regex, max_len: usize, limits: &Limits) -> BTreeSet<Word> {
    enumerate_language(r, max_len, limits).expect("bounded enumeration fits the default caps")
}

/// The union of the clause languages up to `max_len`.
pub fn clause_union_upto(clauses: &[Clause], max_len: usize, limits: &Limits) -> BTreeSet<Word> {
    let mut out = BTreeSet::new();
    for c in clauses {
        out.extend(language_upto(&c.to_regex(), max_len, limits));
    }
    out
}

/// A random reduced expression: a union-free concatenation of literals
/// `1..=letters` and stars of smaller reduced expressions, with at most
/// `budget` syntax nodes (at least one literal).
pub fn random_reduced(rng: &mut ChaCha8Rng, letters: usize, budget: usize) -> Regex {
    assert!(budget >= 1);
    let mut parts = Vec::new();
    let mut left = budget;
    while left > 0 {
        if left >= 3 && rng.gen_bool(0.35) {
            // a star spends one node on itself; leave one for the rest
            let inner_budget = rng.gen_range(1..=left - 2);
            let inner = random_reduced(rng, letters, inner_budget);
            left -= 1 + inner.size();
            parts.push(Regex::star(inner));
        } else {
            parts.push(Regex::literal(rng.gen_range(1..=letters)));
            left -= 1;
        }
        if rng.gen_bool(0.3) {
            break;
        }
    }
    if parts.is_empty() {
        parts.push(Regex::literal(rng.gen_range(1..=letters)));
    }
    Regex::concat(parts)
}
