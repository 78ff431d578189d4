//! Independent ground truth for testing the decision procedure: a bounded
//! breadth-first search over values, a knapsack dynamic program (systems of
//! upward shifts are exactly knapsack instances), and seeded instance
//! generators covering every dispatch case.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::{apply, AffineMap, AffineSystem, Domain, Word};
use crate::config::Limits;
use crate::error::{Error, Result};

/// What a bounded value search learned about one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    /// A shortest path from start to target within the bounds.
    ReachableWithPath(Word),
    /// Nothing found; says nothing about true reachability.
    NotFoundWithinBounds,
}

impl OracleAnswer {
    pub fn found(&self) -> bool {
        matches!(self, OracleAnswer::ReachableWithPath(_))
    }

    pub fn path(&self) -> Option<&Word> {
        match self {
            OracleAnswer::ReachableWithPath(w) => Some(w),
            OracleAnswer::NotFoundWithinBounds => None,
        }
    }
}

/// Largest value bound served by the dense fast path; above it the search
/// falls back to hashed big integers.
const FAST_VALUE_BOUND: u64 = 8_000_000;

/// Breadth-first search over values reachable from the start, exploring
/// only values with `|value| <= value_bound` (the start itself is exempt)
/// and at most `depth_bound` applications, skipping negative values over
/// the naturals. Returns a shortest path to the target if one shows up;
/// ties break toward lower map indices.
pub fn bfs_oracle(sys: &AffineSystem, value_bound: u64, depth_bound: u32) -> OracleAnswer {
    if sys.x == sys.y {
        return OracleAnswer::ReachableWithPath(Word::empty());
    }
    if let Some(answer) = bfs_fast(sys, value_bound, depth_bound) {
        return answer;
    }
    bfs_slow(sys, value_bound, depth_bound)
}

/// Dense-array search over `i64` values; `None` when the instance does not
/// fit the fast representation.
fn bfs_fast(sys: &AffineSystem, value_bound: u64, depth_bound: u32) -> Option<OracleAnswer> {
    if value_bound > FAST_VALUE_BOUND || sys.len() >= 255 {
        return None;
    }
    let bound = value_bound as i64;
    let x = sys.x.to_i64().filter(|v| v.abs() <= bound)?;
    let y = sys.y.to_i64()?;
    let maps: Vec<(i64, i64)> = sys
        .maps()
        .iter()
        .map(|f| Some((f.a.to_i64()?, f.b.to_i64()?)))
        .collect::<Option<_>>()?;
    if maps.iter().any(|&(a, b)| a.abs() > i32::MAX as i64 || b.abs() > i32::MAX as i64) {
        return None;
    }
    let natural = sys.domain == Domain::Naturals;
    let idx = |v: i64| (v + bound) as usize;

    // parent map index per value; 0 = unvisited, 255 = the start
    let mut parent: Vec<u8> = vec![0; 2 * value_bound as usize + 1];
    parent[idx(x)] = 255;
    // predecessor values only for constant-map edges, where the map alone
    // cannot be inverted
    let mut constant_sources: HashMap<i64, i64> = HashMap::new();
    let mut frontier = vec![x];

    for _ in 0..depth_bound {
        let mut next = Vec::new();
        for &v in &frontier {
            for (i, &(a, b)) in maps.iter().enumerate() {
                let wide = a as i128 * v as i128 + b as i128;
                if (natural && wide < 0) || wide.unsigned_abs() > value_bound as u128 {
                    continue;
                }
                let w = wide as i64;
                if parent[idx(w)] != 0 {
                    continue;
                }
                parent[idx(w)] = (i + 1) as u8;
                if a == 0 {
                    constant_sources.insert(w, v);
                }
                if w == y {
                    return Some(OracleAnswer::ReachableWithPath(backtrack_fast(
                        y,
                        x,
                        &maps,
                        &parent,
                        &constant_sources,
                        idx,
                    )));
                }
                next.push(w);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Some(OracleAnswer::NotFoundWithinBounds)
}

fn backtrack_fast(
    y: i64,
    x: i64,
    maps: &[(i64, i64)],
    parent: &[u8],
    constant_sources: &HashMap<i64, i64>,
    idx: impl Fn(i64) -> usize,
) -> Word {
    let mut seq = Vec::new();
    let mut at = y;
    while at != x || parent[idx(at)] != 255 {
        let i = parent[idx(at)] as usize;
        let (a, b) = maps[i - 1];
        seq.push(i);
        at = if a == 0 { constant_sources[&at] } else { (at - b) / a };
    }
    seq.reverse();
    Word::new(seq)
}

fn bfs_slow(sys: &AffineSystem, value_bound: u64, depth_bound: u32) -> OracleAnswer {
    let bound = BigInt::from(value_bound);
    let natural = sys.domain == Domain::Naturals;
    let mut parents: HashMap<BigInt, (BigInt, usize)> = HashMap::new();
    let mut frontier = vec![sys.x.clone()];
    for _ in 0..depth_bound {
        let mut next = Vec::new();
        for v in &frontier {
            for (i, f) in sys.maps().iter().enumerate() {
                let w = apply(f, v);
                if (natural && w.is_negative()) || w.abs() > bound {
                    continue;
                }
                if w == sys.x || parents.contains_key(&w) {
                    continue;
                }
                parents.insert(w.clone(), (v.clone(), i + 1));
                if w == sys.y {
                    let mut seq = Vec::new();
                    let mut at = w;
                    while at != sys.x {
                        let (prev, index) = parents.remove(&at).expect("chain to the start");
                        seq.push(index);
                        at = prev;
                    }
                    seq.reverse();
                    return OracleAnswer::ReachableWithPath(Word::new(seq));
                }
                next.push(w);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    OracleAnswer::NotFoundWithinBounds
}

/// An integer knapsack question: is the capacity a nonnegative integer
/// combination of the weights?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackInstance {
    pub weights: Vec<u64>,
    pub capacity: u64,
}

impl KnapsackInstance {
    pub fn new(weights: Vec<u64>, capacity: u64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSystem("knapsack needs at least one weight".into()));
        }
        if weights.contains(&0) {
            return Err(Error::InvalidSystem("knapsack weights must be positive".into()));
        }
        Ok(KnapsackInstance { weights, capacity })
    }
}

/// The reachability encoding of a knapsack instance: one upward shift per
/// weight, from 0 to the capacity. Every composition is valid, so the two
/// domains agree on these systems.
pub fn knapsack_to_system(inst: &KnapsackInstance, domain: Domain) -> AffineSystem {
    let maps = inst
        .weights
        .iter()
        .map(|&w| AffineMap::new(BigInt::from(1), BigInt::from(w)))
        .collect();
    AffineSystem::new(maps, BigInt::from(0), BigInt::from(inst.capacity), domain)
        .expect("shift systems with nonnegative endpoints are always well formed")
}

/// Table-filling decision of the knapsack question. The table has
/// `capacity + 1` cells, capped by `limits.max_search_nodes`.
pub fn knapsack_dp(inst: &KnapsackInstance, limits: &Limits) -> Result<bool> {
    let cells = inst
        .capacity
        .checked_add(1)
        .and_then(|c| c.to_usize())
        .filter(|&c| c <= limits.max_search_nodes)
        .ok_or_else(|| {
            Error::ResourceExceeded(format!(
                "knapsack capacity {} exceeds the table cap {}",
                inst.capacity, limits.max_search_nodes
            ))
        })?;
    let mut reachable = vec![false; cells];
    reachable[0] = true;
    for c in 1..cells {
        reachable[c] = inst
            .weights
            .iter()
            .any(|&w| (w as usize) <= c && reachable[c - w as usize]);
    }
    Ok(reachable[cells - 1])
}

/// Structural family of a generated instance, matching the solver's
/// dispatch cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileClass {
    /// Unconstrained coefficients.
    Mixed,
    /// Every slope has magnitude at least 2.
    AllExpanding,
    /// At least one pure shift.
    WithShift,
    /// Exactly one slope -1 map; everything else expanding.
    WithInvolution,
    /// At least two distinct slope -1 maps.
    TwoInvolutions,
    /// At least one constant map.
    WithConstant,
    /// Naturals domain with at least one negative-slope map.
    ShrinkingNaturals,
}

/// Bounds for the instance generator.
#[derive(Clone, Debug)]
pub struct Profile {
    pub class: ProfileClass,
    pub maps: usize,
    /// Slope magnitudes stay at or below this; must be at least 2.
    pub max_slope: u32,
    pub max_offset: u32,
    pub max_endpoint: u32,
    pub domain: Domain,
}

impl Profile {
    pub fn new(class: ProfileClass, maps: usize, domain: Domain) -> Self {
        Profile { class, maps, max_slope: 3, max_offset: 4, max_endpoint: 10, domain }
    }
}

/// Deterministic seeded instance generator. The same seed and profile
/// always produce the same system.
pub fn random_system(seed: u64, profile: &Profile) -> Result<AffineSystem> {
    let minimum = match profile.class {
        ProfileClass::TwoInvolutions => 2,
        _ => 1,
    };
    if profile.maps < minimum || profile.max_slope < 2 {
        return Err(Error::Precondition(
            "profiles need enough maps and a slope bound of at least 2".into(),
        ));
    }
    if profile.class == ProfileClass::ShrinkingNaturals && profile.domain != Domain::Naturals {
        return Err(Error::Precondition(
            "shrinking profiles only make sense over the naturals".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slope = profile.max_slope as i64;
    let offset = profile.max_offset as i64;
    let any_offset = |rng: &mut ChaCha8Rng| rng.gen_range(-offset..=offset);
    let expanding = |rng: &mut ChaCha8Rng| {
        let magnitude = rng.gen_range(2..=slope);
        if rng.gen() {
            magnitude
        } else {
            -magnitude
        }
    };

    let mut maps: Vec<(i64, i64)> = Vec::with_capacity(profile.maps);
    match profile.class {
        ProfileClass::Mixed => {}
        ProfileClass::AllExpanding => {}
        ProfileClass::WithShift => {
            let b = loop {
                let b = any_offset(&mut rng);
                if b != 0 {
                    break b;
                }
            };
            maps.push((1, b));
        }
        ProfileClass::WithInvolution | ProfileClass::TwoInvolutions => {
            maps.push((-1, any_offset(&mut rng)));
            if profile.class == ProfileClass::TwoInvolutions {
                let first = maps[0].1;
                let b = loop {
                    let b = any_offset(&mut rng);
                    if b != first {
                        break b;
                    }
                };
                maps.push((-1, b));
            }
        }
        ProfileClass::WithConstant => {
            maps.push((0, any_offset(&mut rng)));
        }
        ProfileClass::ShrinkingNaturals => {
            maps.push((rng.gen_range(-slope..=-1), rng.gen_range(0..=offset)));
        }
    }
    while maps.len() < profile.maps {
        let a = match profile.class {
            ProfileClass::Mixed => rng.gen_range(-slope..=slope),
            ProfileClass::AllExpanding | ProfileClass::WithInvolution => expanding(&mut rng),
            ProfileClass::TwoInvolutions => expanding(&mut rng),
            ProfileClass::WithShift | ProfileClass::WithConstant => rng.gen_range(-slope..=slope),
            ProfileClass::ShrinkingNaturals => rng.gen_range(1..=slope),
        };
        maps.push((a, any_offset(&mut rng)));
    }
    maps.shuffle(&mut rng);

    let reach = profile.max_endpoint as i64;
    let low = if profile.domain == Domain::Naturals { 0 } else { -reach };
    let x = rng.gen_range(low..=reach);
    let y = rng.gen_range(low..=reach);
    AffineSystem::from_i64(&maps, x, y, profile.domain)
}
