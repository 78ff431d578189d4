//! Extremum analysis for congruence-constrained words.
//!
//! Given a system whose maps all have nonzero slope, a nonzero offset `k`,
//! and endpoints `x`, `y`, this module computes the supremum (or infimum) of
//! `P_w(x)` over all words `w` with `P_w(x) = y (mod k)`, where `P_w` is the
//! composite map of `w`. The pipeline is: congruence automaton, emptiness
//! check, state elimination to a regular expression, a scan for
//! negative-slope letters (which make the extremum unbounded), disjunctive
//! normal form, and a per-clause walk that decides for every star whether
//! pumping it can improve the current value.
//!
//! The per-clause walk is exact because all slopes are positive there: maps
//! are monotone, so skipping a star that cannot improve the value is always
//! optimal, and one improving pump can be repeated to improve without bound.
//!
//! A validity-aware variant restricts the supremum to words whose whole
//! orbit stays nonnegative; it is what the naturals solver uses.

use std::collections::VecDeque;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::affine::{apply, AffineMap, AffineSystem, Domain, ExtInt, RleRun, RleWord, Word};
use crate::automaton::{automaton_to_regex, build_mod_automaton, mod_reachable, ModAutomaton};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::regex::{
    eliminate_empty, has_negative_literal, to_dnf, Clause, Factor, Regex, RegexKind,
};

/// Which end of the congruence class to chase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumMode {
    Sup,
    Inf,
}

impl ExtremumMode {
    /// True when `a` is strictly better than `b` for this mode.
    fn improves(self, a: &BigInt, b: &BigInt) -> bool {
        match self {
            ExtremumMode::Sup => a > b,
            ExtremumMode::Inf => a < b,
        }
    }
}

/// A composition word with explicit repetition, so that pump counts too
/// large to spell out stay symbolic until the final encoding step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WordExpr {
    Lit(usize),
    Seq(Vec<WordExpr>),
    Pow(Box<WordExpr>, BigUint),
}

impl WordExpr {
    /// The composite affine map of the whole expression.
    pub fn composed_map(&self, sys: &AffineSystem) -> Result<AffineMap> {
        match self {
            WordExpr::Lit(i) => Ok(sys.map(*i)?.clone()),
            WordExpr::Seq(parts) => {
                let mut acc = AffineMap::identity();
                for p in parts {
                    acc = acc.then(&p.composed_map(sys)?);
                }
                Ok(acc)
            }
            WordExpr::Pow(body, n) => body.composed_map(sys)?.pow_map(n),
        }
    }
}

/// Encodes an expression as a run-length word over the same indices.
///
/// A power of a block of pure shifts is reordered into one run per index,
/// upward shifts first: shifts commute, so the value is unchanged, and the
/// orbit first rises monotonically and then falls to the block's final
/// value, so a nonnegative orbit stays nonnegative. Powers of blocks that
/// multiply are spelled out instead, which is only possible while the total
/// run count stays within `limits.max_witness_runs`; other cases fail with
/// `WitnessUnavailable`.
pub fn flatten_word_expr(expr: &WordExpr, sys: &AffineSystem, limits: &Limits) -> Result<RleWord> {
    let flat = flatten_rec(expr, sys, limits)?;
    Ok(flat)
}

fn flatten_rec(expr: &WordExpr, sys: &AffineSystem, limits: &Limits) -> Result<RleWord> {
    match expr {
        WordExpr::Lit(i) => Ok(RleWord::new(vec![RleRun::new(*i, 1u32)])),
        WordExpr::Seq(parts) => {
            let mut out = RleWord::empty();
            for p in parts {
                let flat = flatten_rec(p, sys, limits)?;
                for run in flat.runs {
                    out.push_run(run);
                }
                if out.runs.len() > limits.max_witness_runs {
                    return Err(Error::WitnessUnavailable);
                }
            }
            Ok(out)
        }
        WordExpr::Pow(body, n) => {
            if n.is_zero() {
                return Ok(RleWord::empty());
            }
            let flat = flatten_rec(body, sys, limits)?;
            if flat.runs.is_empty() {
                return Ok(RleWord::empty());
            }
            let all_shifts = flat
                .runs
                .iter()
                .map(|r| sys.map(r.index).map(|f| f.a.is_one()))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .all(|s| s);
            if all_shifts {
                // one aggregated run per index, in two groups
                let mut totals: Vec<(usize, BigUint)> = Vec::new();
                for run in &flat.runs {
                    match totals.iter_mut().find(|(i, _)| *i == run.index) {
                        Some((_, c)) => *c += &run.count,
                        None => totals.push((run.index, run.count.clone())),
                    }
                }
                totals.sort_by_key(|(i, _)| *i);
                let mut out = RleWord::empty();
                for upward in [true, false] {
                    for (i, c) in &totals {
                        if sys.map(*i)?.b.is_positive() == upward {
                            out.push_run(RleRun::new(*i, c * n));
                        }
                    }
                }
                return Ok(out);
            }
            let copies = n.to_usize().ok_or(Error::WitnessUnavailable)?;
            if flat.runs.len().saturating_mul(copies) > limits.max_witness_runs {
                return Err(Error::WitnessUnavailable);
            }
            let mut out = RleWord::empty();
            for _ in 0..copies {
                for run in &flat.runs {
                    out.push_run(run.clone());
                }
            }
            Ok(out)
        }
    }
}

/// Smallest `n >= 0` with `pump^n(start) >= threshold` (for `Sup`), or
/// `<= threshold` (for `Inf`). The pump must have positive slope and move
/// `start` strictly in the right direction, so the orbit is monotone and
/// such an `n` exists.
pub fn solve_pump_count(
    pump: &AffineMap,
    start: &BigInt,
    threshold: &BigInt,
    mode: ExtremumMode,
) -> Result<BigUint> {
    let done = |v: &BigInt| match mode {
        ExtremumMode::Sup => v >= threshold,
        ExtremumMode::Inf => v <= threshold,
    };
    if done(start) {
        return Ok(BigUint::zero());
    }
    if !pump.a.is_positive() {
        return Err(Error::Precondition(format!(
            "pump map {pump} must have positive slope"
        )));
    }
    let first = apply(pump, start);
    if !mode.improves(&first, start) {
        return Err(Error::Precondition(format!(
            "pump map {pump} does not move {start} toward the threshold"
        )));
    }
    if pump.a.is_one() {
        // start + n*b crosses the threshold at the usual ceiling division
        let n = match mode {
            ExtremumMode::Sup => (threshold - start).div_ceil(&pump.b),
            ExtremumMode::Inf => (start - threshold).div_ceil(&-&pump.b),
        };
        return Ok(n.to_biguint().expect("positive crossing count"));
    }
    // Slope >= 2: the gap at least doubles each step, so the loop is short.
    let mut v = first;
    let mut n = BigUint::one();
    let cap = 128 + threshold.magnitude().bits() + start.magnitude().bits();
    while !done(&v) {
        v = apply(pump, &v);
        n += BigUint::one();
        if n.bits() > 64 || n.to_u64().unwrap_or(u64::MAX) > cap {
            return Err(Error::ResourceExceeded(
                "pump count iteration failed to converge".into(),
            ));
        }
    }
    Ok(n)
}

/// The `u`-threshold that makes a literal suffix meet `target`: for `Sup`
/// the smallest `u` with `P_suffix(u) >= target`, for `Inf` the largest `u`
/// with `P_suffix(u) <= target`. With `valid` set, the `Sup` threshold also
/// forces every intermediate value of the suffix orbit to be nonnegative.
pub fn suffix_threshold(
    sys: &AffineSystem,
    suffix: &Word,
    target: &BigInt,
    mode: ExtremumMode,
    valid: bool,
) -> Result<BigInt> {
    let mut acc = AffineMap::identity();
    let mut steps = Vec::with_capacity(suffix.len());
    for &i in &suffix.seq {
        acc = acc.then(sys.map(i)?);
        steps.push(acc.clone());
    }
    if !acc.a.is_positive() {
        return Err(Error::Precondition(
            "suffix thresholds need positive composite slope".into(),
        ));
    }
    match mode {
        ExtremumMode::Sup => {
            let mut bound = (target - &acc.b).div_ceil(&acc.a);
            if valid {
                for step in &steps {
                    bound = bound.max((-&step.b).div_ceil(&step.a));
                }
            }
            Ok(bound)
        }
        ExtremumMode::Inf => {
            if valid {
                return Err(Error::Precondition(
                    "validity-aware analysis only chases suprema".into(),
                ));
            }
            Ok((target - &acc.b).div_floor(&acc.a))
        }
    }
}

/// Outcome of the congruence extremum analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModExtremumResult {
    /// No word at all lands in the right congruence class.
    Empty,
    /// The extremum is attained, by `word`.
    Finite { value: BigInt, word: Word },
    /// Unbounded: after `prefix` (value `prefix_value`), the block `cycle`
    /// strictly improves the value and can be repeated any number of times
    /// before finishing with `suffix`; every such word is congruent.
    Unbounded {
        prefix: Word,
        prefix_value: BigInt,
        cycle: WordExpr,
        suffix: Word,
    },
    /// Unbounded in both directions: a congruent word that passes through a
    /// negative-slope map, around which insertions swing the value.
    NegativeUnbounded { word: Word },
}

/// Result plus the resource footprint of the run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModExtremumOutcome {
    pub result: ModExtremumResult,
    /// Largest expression size the pipeline held at once.
    pub peak_nodes: usize,
    /// Number of normal-form clauses walked.
    pub clause_count: usize,
}

/// Supremum (`k < 0` callers) or infimum (`k > 0` callers) of congruent
/// words over the integers.
pub fn mod_extremum(
    sys: &AffineSystem,
    k: &BigInt,
    mode: ExtremumMode,
    limits: &Limits,
) -> Result<ModExtremumOutcome> {
    if sys.domain != Domain::Integers {
        return Err(Error::Precondition(
            "the integer extremum needs an integer-domain system".into(),
        ));
    }
    extremum_pipeline(sys, k, mode, false, limits)
}

/// Supremum over congruent words whose whole orbit from `x` stays
/// nonnegative. Requires every slope to be at least 1.
pub fn mod_extremum_valid(sys: &AffineSystem, k: &BigInt, limits: &Limits) -> Result<ModExtremumOutcome> {
    if sys.domain != Domain::Naturals {
        return Err(Error::Precondition(
            "the validity-aware extremum needs a naturals-domain system".into(),
        ));
    }
    extremum_pipeline(sys, k, ExtremumMode::Sup, true, limits)
}

fn extremum_pipeline(
    sys: &AffineSystem,
    k: &BigInt,
    mode: ExtremumMode,
    valid: bool,
    limits: &Limits,
) -> Result<ModExtremumOutcome> {
    for f in sys.maps() {
        if f.a.is_zero() {
            return Err(Error::Precondition(
                "constant maps must be split off before the congruence analysis".into(),
            ));
        }
        if valid && f.a.is_negative() {
            return Err(Error::Precondition(
                "the validity-aware analysis needs positive slopes".into(),
            ));
        }
    }
    let aut = build_mod_automaton(sys, k, limits)?;
    if !mod_reachable(&aut) {
        return Ok(ModExtremumOutcome {
            result: ModExtremumResult::Empty,
            peak_nodes: 0,
            clause_count: 0,
        });
    }
    let regex = eliminate_empty(&automaton_to_regex(&aut, limits)?);
    let mut peak_nodes = regex.size();
    if regex.is_empty_set() {
        // cannot happen after the emptiness check; kept as a safety net
        return Ok(ModExtremumOutcome {
            result: ModExtremumResult::Empty,
            peak_nodes,
            clause_count: 0,
        });
    }
    if !valid && has_negative_literal(&regex, sys)? {
        let word = negative_witness_word(&aut, sys)
            .expect("a negative literal in the expression implies a congruent word using one");
        return Ok(ModExtremumOutcome {
            result: ModExtremumResult::NegativeUnbounded { word },
            peak_nodes,
            clause_count: 0,
        });
    }
    let clauses = to_dnf(&regex, limits)?;
    peak_nodes = peak_nodes.max(clauses.iter().map(Clause::size).sum());
    let walk = ClauseWalk { sys, mode, valid };
    let mut best: Option<(BigInt, Word)> = None;
    for clause in &clauses {
        match walk.clause_outcome(&sys.x, clause)? {
            ClauseOutcome::Discarded => {}
            ClauseOutcome::Finite { value, word } => {
                let replace = match &best {
                    Some((so_far, _)) => mode.improves(&value, so_far),
                    None => true,
                };
                if replace {
                    best = Some((value, word));
                }
            }
            ClauseOutcome::Unbounded { prefix, prefix_value, cycle, suffix } => {
                return Ok(ModExtremumOutcome {
                    result: ModExtremumResult::Unbounded { prefix, prefix_value, cycle, suffix },
                    peak_nodes,
                    clause_count: clauses.len(),
                });
            }
        }
    }
    let result = match best {
        Some((value, word)) => ModExtremumResult::Finite { value, word },
        None => ModExtremumResult::Empty,
    };
    Ok(ModExtremumOutcome { result, peak_nodes, clause_count: clauses.len() })
}

/// Shortest congruent word that uses at least one negative-slope map, found
/// by searching the automaton paired with a "seen a negative letter" bit.
fn negative_witness_word(aut: &ModAutomaton, sys: &AffineSystem) -> Option<Word> {
    let negative: Vec<bool> = sys.maps().iter().map(|f| f.a.is_negative()).collect();
    let pack = |state: usize, bit: bool| state * 2 + usize::from(bit);
    let start = pack(aut.start, false);
    let target = pack(aut.accept, true);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; aut.states * 2];
    let mut seen = vec![false; aut.states * 2];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == target {
            let mut seq = Vec::new();
            let mut at = node;
            while let Some((prev, letter)) = parent[at] {
                seq.push(letter);
                at = prev;
            }
            seq.reverse();
            return Some(Word::new(seq));
        }
        let (state, bit) = (node / 2, node % 2 == 1);
        for i in 1..=aut.letters {
            let next = pack(aut.transitions[state][i - 1], bit || negative[i - 1]);
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, i));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Checks that `e` is a reduced expression over `sys`: no empty set, no
/// union, and every literal's map has positive slope.
fn check_reduced(e: &Regex, sys: &AffineSystem) -> Result<()> {
    match e.kind() {
        RegexKind::Empty => Err(Error::Precondition(
            "reduced expressions cannot contain the empty set".into(),
        )),
        RegexKind::Union(_) => Err(Error::Precondition(
            "reduced expressions cannot contain unions".into(),
        )),
        RegexKind::Epsilon => Ok(()),
        RegexKind::Literal(i) => {
            if sys.map(*i)?.a.is_positive() {
                Ok(())
            } else {
                Err(Error::Precondition(format!(
                    "literal {i} has nonpositive slope; the monotone analysis does not apply"
                )))
            }
        }
        RegexKind::Concat(children) => children.iter().try_for_each(|c| check_reduced(c, sys)),
        RegexKind::Star(body) => check_reduced(body, sys),
    }
}

/// True when some word in the language of `e` strictly improves on `z`
/// (larger for `Sup`, smaller for `Inf`). `e` must be a reduced expression
/// whose literals all have positive slope.
pub fn increase_predicate(
    z: &BigInt,
    e: &Regex,
    sys: &AffineSystem,
    mode: ExtremumMode,
) -> Result<bool> {
    check_reduced(e, sys)?;
    let factors = star_body_factors(e)?;
    let walk = ClauseWalk { sys, mode, valid: false };
    Ok(walk.improving_word(z, &factors)?.is_some())
}

/// True when some word in the language of `e` strictly increases `z` while
/// keeping the whole orbit from `z` nonnegative. Requires `z >= 0`.
pub fn valid_increase_predicate(z: &BigInt, e: &Regex, sys: &AffineSystem) -> Result<bool> {
    if z.is_negative() {
        return Err(Error::Precondition(
            "the validity-aware predicate needs a nonnegative point".into(),
        ));
    }
    check_reduced(e, sys)?;
    let factors = star_body_factors(e)?;
    let walk = ClauseWalk { sys, mode: ExtremumMode::Sup, valid: true };
    Ok(walk.improving_word(z, &factors)?.is_some())
}

/// Extremum of `P_w(start)` over the words `w` in the clause's language:
/// `None` when validity-aware mode discards the clause (a mandatory literal
/// step goes negative), otherwise the supremum or infimum as an extended
/// integer.
pub fn clause_extremum(
    start: &BigInt,
    clause: &Clause,
    sys: &AffineSystem,
    mode: ExtremumMode,
    valid: bool,
) -> Result<Option<ExtInt>> {
    if valid && start.is_negative() {
        return Err(Error::Precondition(
            "the validity-aware walk needs a nonnegative start".into(),
        ));
    }
    check_reduced(&clause.to_regex(), sys)?;
    let walk = ClauseWalk { sys, mode, valid };
    Ok(match walk.clause_outcome(start, clause)? {
        ClauseOutcome::Discarded => None,
        ClauseOutcome::Finite { value, .. } => Some(ExtInt::Finite(value)),
        ClauseOutcome::Unbounded { .. } => Some(match mode {
            ExtremumMode::Sup => ExtInt::PosInf,
            ExtremumMode::Inf => ExtInt::NegInf,
        }),
    })
}

enum ClauseOutcome {
    Discarded,
    Finite { value: BigInt, word: Word },
    Unbounded { prefix: Word, prefix_value: BigInt, cycle: WordExpr, suffix: Word },
}

struct ClauseWalk<'a> {
    sys: &'a AffineSystem,
    mode: ExtremumMode,
    valid: bool,
}

impl ClauseWalk<'_> {
    /// Walks the clause left to right, keeping the value of the all-skip
    /// word. The first star that can strictly improve the running value
    /// makes the clause unbounded; in validity-aware mode a literal step
    /// below zero discards the clause, because stars can only have raised
    /// the value above the walked one, never rescued a mandatory dip.
    fn clause_outcome(&self, start: &BigInt, clause: &Clause) -> Result<ClauseOutcome> {
        let mut value = start.clone();
        let mut literals: Vec<usize> = Vec::new();
        for (pos, factor) in clause.factors.iter().enumerate() {
            match factor {
                Factor::Literal(i) => {
                    value = apply(self.sys.map(*i)?, &value);
                    literals.push(*i);
                    if self.valid && value.is_negative() {
                        return Ok(ClauseOutcome::Discarded);
                    }
                }
                Factor::Star(body) => {
                    let factors = star_body_factors(body)?;
                    if let Some(cycle) = self.improving_word(&value, &factors)? {
                        let suffix = literals_after(&clause.factors, pos);
                        return Ok(ClauseOutcome::Unbounded {
                            prefix: Word::new(literals),
                            prefix_value: value,
                            cycle,
                            suffix: Word::new(suffix),
                        });
                    }
                }
            }
        }
        Ok(ClauseOutcome::Finite { value, word: Word::new(literals) })
    }

    /// A word from the given factor sequence that strictly improves on `z`,
    /// or `None` when no such word exists. When an inner star can improve
    /// its local value, it is pumped just far enough that the remaining
    /// literals land strictly past `z` (and stay nonnegative in
    /// validity-aware mode); the improving-at-a-point property is monotone
    /// in the point, which makes the leftmost-first scan exact.
    fn improving_word(&self, z: &BigInt, factors: &[Factor]) -> Result<Option<WordExpr>> {
        let mut value = z.clone();
        let mut parts: Vec<WordExpr> = Vec::new();
        for (pos, factor) in factors.iter().enumerate() {
            match factor {
                Factor::Literal(i) => {
                    value = apply(self.sys.map(*i)?, &value);
                    parts.push(WordExpr::Lit(*i));
                    if self.valid && value.is_negative() {
                        return Ok(None);
                    }
                }
                Factor::Star(body) => {
                    let inner_factors = star_body_factors(body)?;
                    if let Some(inner) = self.improving_word(&value, &inner_factors)? {
                        let suffix = Word::new(literals_after(factors, pos));
                        let target = match self.mode {
                            ExtremumMode::Sup => z + 1,
                            ExtremumMode::Inf => z - 1,
                        };
                        let threshold =
                            suffix_threshold(self.sys, &suffix, &target, self.mode, self.valid)?;
                        let pump = inner.composed_map(self.sys)?;
                        let count = solve_pump_count(&pump, &value, &threshold, self.mode)?;
                        parts.push(WordExpr::Pow(Box::new(inner), count));
                        parts.extend(suffix.seq.iter().map(|&i| WordExpr::Lit(i)));
                        return Ok(Some(WordExpr::Seq(parts)));
                    }
                }
            }
        }
        if self.mode.improves(&value, z) {
            Ok(Some(WordExpr::Seq(parts)))
        } else {
            Ok(None)
        }
    }
}

fn literals_after(factors: &[Factor], pos: usize) -> Vec<usize> {
    factors[pos + 1..]
        .iter()
        .filter_map(|f| match f {
            Factor::Literal(i) => Some(*i),
            Factor::Star(_) => None,
        })
        .collect()
}

/// Splits a union-free star body into its factor sequence.
fn star_body_factors(body: &Regex) -> Result<Vec<Factor>> {
    fn single(r: &Regex) -> Result<Factor> {
        match r.kind() {
            RegexKind::Literal(i) => Ok(Factor::Literal(*i)),
            RegexKind::Star(b) => Ok(Factor::Star((**b).clone())),
            _ => Err(Error::Precondition(
                "star bodies must be union-free concatenations".into(),
            )),
        }
    }
    match body.kind() {
        RegexKind::Epsilon => Ok(Vec::new()),
        RegexKind::Concat(children) => children.iter().map(single).collect(),
        _ => Ok(vec![single(body)?]),
    }
}
