//! Bounded-interval search for systems whose maps all move points outward.
//!
//! When every map doubles distances (|a| >= 2), any trajectory that leaves a
//! window around the origin keeps growing in magnitude and can never return,
//! so reachability reduces to a finite breadth-first search inside that
//! window. A single distance-preserving map with a = -1 only reflects the
//! window, which widens it by at most its own offset.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::affine::{apply, AffineSystem, Domain, Word};
use crate::config::Limits;
use crate::error::{Error, Result};

/// Result of a bounded search: either a witnessing word (first applied map
/// first) or a proof of exhaustion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Reachable(Word),
    Unreachable,
}

impl SearchOutcome {
    pub fn is_reachable(&self) -> bool {
        matches!(self, SearchOutcome::Reachable(_))
    }
}

/// Largest absolute offset plus one; every map moves points of magnitude at
/// least this strictly outward.
fn escape_radius(sys: &AffineSystem) -> BigInt {
    let max_b = sys
        .maps()
        .iter()
        .map(|f| f.b.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    max_b + BigInt::one()
}

/// Decides reachability over the integers for a system whose maps all have
/// |a| >= 2, except at most one reflection with a = -1.
pub fn decide_expanding_z(sys: &AffineSystem, limits: &Limits) -> Result<SearchOutcome> {
    if sys.domain != Domain::Integers {
        return Err(Error::Precondition("integer search needs an integer system".into()));
    }
    let mut reflection: Option<&BigInt> = None;
    for f in sys.maps() {
        if f.is_involution() {
            if reflection.is_some() {
                return Err(Error::Precondition(
                    "at most one reflection is supported".into(),
                ));
            }
            reflection = Some(&f.b);
        } else if f.a.abs() < BigInt::from(2) {
            return Err(Error::Precondition(format!(
                "map {f} neither doubles distances nor reflects"
            )));
        }
    }
    let radius = escape_radius(sys).max(sys.y.abs());
    let mut lo = -radius.clone();
    let mut hi = radius.clone();
    if let Some(b) = reflection {
        // The reflection z -> -z + b maps [lo, hi] onto [b - hi, b - lo];
        // widening by b in the right direction makes the window closed
        // under it.
        lo = lo.clone().min(-radius.clone() + b);
        hi = hi.clone().max(radius + b);
    }
    interval_bfs(sys, &lo, &hi, limits)
}

/// Decides reachability over the naturals for a system whose maps all have
/// a >= 2, or a = 1 with b > 0.
pub fn decide_expanding_n(sys: &AffineSystem, limits: &Limits) -> Result<SearchOutcome> {
    if sys.domain != Domain::Naturals {
        return Err(Error::Precondition("natural search needs a naturals system".into()));
    }
    for f in sys.maps() {
        let growing_shift = f.a.is_one() && f.b.is_positive();
        if !growing_shift && f.a < BigInt::from(2) {
            return Err(Error::Precondition(format!(
                "map {f} does not grow on large naturals"
            )));
        }
    }
    let radius = escape_radius(sys).max(sys.y.abs());
    interval_bfs(sys, &BigInt::zero(), &radius, limits)
}

/// Breadth-first search from `sys.x` over values in `[lo, hi]`. The start is
/// explored even when it lies outside the window; all other values outside
/// it are pruned. Successors are tried in map order, so the outcome is
/// deterministic and the path is shortest, ties broken by smallest index.
fn interval_bfs(sys: &AffineSystem, lo: &BigInt, hi: &BigInt, limits: &Limits) -> Result<SearchOutcome> {
    if sys.x == sys.y {
        return Ok(SearchOutcome::Reachable(Word::empty()));
    }
    // parent value and the 1-based map index that led here
    let mut parents: BTreeMap<BigInt, (BigInt, usize)> = BTreeMap::new();
    let mut queue: VecDeque<BigInt> = VecDeque::from([sys.x.clone()]);
    let mut visited = 1usize;
    while let Some(z) = queue.pop_front() {
        for (i, f) in sys.maps().iter().enumerate() {
            let next = apply(f, &z);
            if next < *lo || next > *hi || next == sys.x || parents.contains_key(&next) {
                continue;
            }
            visited += 1;
            if visited > limits.max_search_nodes {
                return Err(Error::ResourceExceeded(format!(
                    "interval search exceeded {} values",
                    limits.max_search_nodes
                )));
            }
            parents.insert(next.clone(), (z.clone(), i + 1));
            if next == sys.y {
                return Ok(SearchOutcome::Reachable(backtrack(&parents, sys)));
            }
            queue.push_back(next);
        }
    }
    Ok(SearchOutcome::Unreachable)
}

fn backtrack(parents: &BTreeMap<BigInt, (BigInt, usize)>, sys: &AffineSystem) -> Word {
    let mut seq = Vec::new();
    let mut at = sys.y.clone();
    while at != sys.x {
        let (prev, index) = parents.get(&at).expect("path is connected");
        seq.push(*index);
        at = prev.clone();
    }
    seq.reverse();
    Word::new(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::apply_word;

    fn limits() -> Limits {
        Limits::default()
    }

    fn z_system(maps: &[(i64, i64)], x: i64, y: i64) -> AffineSystem {
        AffineSystem::from_i64(maps, x, y, Domain::Integers).unwrap()
    }

    fn n_system(maps: &[(i64, i64)], x: i64, y: i64) -> AffineSystem {
        AffineSystem::from_i64(maps, x, y, Domain::Naturals).unwrap()
    }

    fn expect_path(sys: &AffineSystem, outcome: &SearchOutcome) {
        match outcome {
            SearchOutcome::Reachable(w) => {
                let (value, _) = apply_word(sys, w, &sys.x).unwrap();
                assert_eq!(value, sys.y, "path {w:?} does not land on target");
            }
            SearchOutcome::Unreachable => panic!("expected a path"),
        }
    }

    #[test]
    fn doubling_and_tripling_reach_twelve() {
        let sys = z_system(&[(2, 0), (3, 0)], 1, 12);
        let out = decide_expanding_z(&sys, &limits()).unwrap();
        // breadth-first order: 1 -> 2 -> 4 -> 12, doubling twice then tripling
        assert_eq!(out, SearchOutcome::Reachable(Word::new(vec![1, 1, 2])));
    }

    #[test]
    fn doubling_misses_odd_target() {
        let sys = z_system(&[(2, 0)], 1, 3);
        let out = decide_expanding_z(&sys, &limits()).unwrap();
        assert_eq!(out, SearchOutcome::Unreachable);
    }

    #[test]
    fn reflection_reaches_negative_target() {
        let sys = z_system(&[(-1, 1), (2, 0)], 3, -2);
        let out = decide_expanding_z(&sys, &limits()).unwrap();
        expect_path(&sys, &out);
    }

    #[test]
    fn reflection_widens_window_when_needed() {
        // The only route from 6 to -3 is 6 --2z--> 12 --(-z+9)--> -3, and 12
        // lies outside the unwidened window [-10, 10].
        let sys = z_system(&[(-1, 9), (2, 0)], 6, -3);
        let out = decide_expanding_z(&sys, &limits()).unwrap();
        assert_eq!(out, SearchOutcome::Reachable(Word::new(vec![2, 1])));
    }

    #[test]
    fn start_outside_window_only_matches_itself() {
        let sys = z_system(&[(2, 0)], 100, 100);
        assert_eq!(
            decide_expanding_z(&sys, &limits()).unwrap(),
            SearchOutcome::Reachable(Word::empty())
        );
        let sys = z_system(&[(2, 0)], 100, 1);
        assert_eq!(decide_expanding_z(&sys, &limits()).unwrap(), SearchOutcome::Unreachable);
    }

    #[test]
    fn naturals_prune_negative_intermediates() {
        let sys = n_system(&[(2, -5)], 3, 1);
        let out = decide_expanding_n(&sys, &limits()).unwrap();
        assert_eq!(out, SearchOutcome::Reachable(Word::new(vec![1])));

        let sys = n_system(&[(2, -5)], 1, 0);
        assert_eq!(decide_expanding_n(&sys, &limits()).unwrap(), SearchOutcome::Unreachable);
    }

    #[test]
    fn naturals_allow_growing_shifts() {
        let sys = n_system(&[(1, 4), (3, 1)], 0, 13);
        let out = decide_expanding_n(&sys, &limits()).unwrap();
        expect_path(&sys, &out);
    }

    #[test]
    fn rejects_maps_outside_the_fragment() {
        let sys = z_system(&[(1, 2), (2, 0)], 0, 4);
        assert!(matches!(
            decide_expanding_z(&sys, &limits()),
            Err(Error::Precondition(_))
        ));
        let sys = z_system(&[(-1, 1), (-1, 3)], 0, 4);
        assert!(matches!(
            decide_expanding_z(&sys, &limits()),
            Err(Error::Precondition(_))
        ));
        let sys = n_system(&[(1, -2), (2, 0)], 5, 1);
        assert!(matches!(
            decide_expanding_n(&sys, &limits()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn search_cap_is_enforced() {
        let tight = Limits {
            max_search_nodes: 3,
            ..Limits::default()
        };
        let sys = z_system(&[(2, 1), (3, -2)], 0, 1000);
        assert!(matches!(
            decide_expanding_z(&sys, &tight),
            Err(Error::ResourceExceeded(_))
        ));
    }

    #[test]
    fn agrees_with_value_bfs_on_small_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let slopes = [-3, -2, 2, 3];
        for _ in 0..400 {
            let n = rng.gen_range(1..=2);
            let mut maps = Vec::new();
            let mut reflections = 0;
            for _ in 0..n {
                if reflections == 0 && rng.gen_bool(0.3) {
                    reflections += 1;
                    maps.push((-1, rng.gen_range(-3..=3)));
                } else {
                    maps.push((slopes[rng.gen_range(0..4)], rng.gen_range(-3..=3)));
                }
            }
            let x = rng.gen_range(-8..=8);
            let y = rng.gen_range(-8..=8);
            let sys = z_system(&maps, x, y);
            let got = decide_expanding_z(&sys, &limits()).unwrap();
            if got.is_reachable() {
                expect_path(&sys, &got);
            }
            match brute_reachable(&sys, 2000, 64) {
                Some(true) => {
                    assert!(got.is_reachable(), "missed a path for {maps:?} {x} -> {y}")
                }
                Some(false) => {
                    assert!(!got.is_reachable(), "phantom path for {maps:?} {x} -> {y}")
                }
                None => {}
            }
        }
    }

    /// Depth-bounded search over raw values; `Some(true)` when the target
    /// was seen, `Some(false)` when the frontier died out, `None` when the
    /// depth bound was hit first.
    fn brute_reachable(sys: &AffineSystem, value_cap: i64, depth: usize) -> Option<bool> {
        use std::collections::BTreeSet;
        let mut layer = BTreeSet::from([sys.x.clone()]);
        let mut seen = layer.clone();
        if layer.contains(&sys.y) {
            return Some(true);
        }
        for _ in 0..depth {
            let mut next = BTreeSet::new();
            for z in &layer {
                for f in sys.maps() {
                    let v = apply(f, z);
                    if v.abs() <= BigInt::from(value_cap) && !seen.contains(&v) {
                        next.insert(v);
                    }
                }
            }
            if next.contains(&sys.y) {
                return Some(true);
            }
            if next.is_empty() {
                return Some(false);
            }
            seen.extend(next.iter().cloned());
            layer = next;
        }
        None
    }
}
