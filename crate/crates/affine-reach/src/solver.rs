//! The reachability decision procedure.
//!
//! `decide` answers whether the target is reachable from the start by
//! composing maps from the system, over the integers or over the naturals
//! (where every intermediate value must stay nonnegative). Reachable
//! verdicts carry a run-length-encoded witness whenever one fits in the
//! configured budget; witnesses are checkable in time polynomial in their
//! encoded size with [`crate::affine::check_witness`].
//!
//! The dispatch peels off maps that break the "every map moves large values
//! outward" picture one case at a time:
//!
//! * a constant map splits the question into "never use it" and "use it
//!   last, restarting from its value";
//! * the identity is dropped;
//! * a shift `z + k` reduces reachability to an extremum over the words
//!   that land in the right class modulo `k` (over the naturals this fires
//!   for downward shifts, with the validity-aware extremum);
//! * over the naturals, a negative-slope map is applicable only on a finite
//!   range, so reachability becomes a search over a finite anchor graph
//!   whose edges are decided recursively without that map;
//! * over the integers, two reflections compose to a shift, which is added
//!   and handled by the shift case;
//! * what remains expands distances, and a bounded window search decides.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::affine::{apply, AffineMap, AffineSystem, Domain, RleRun, RleWord, Word};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::interval::{decide_expanding_n, decide_expanding_z, SearchOutcome};
use crate::monotone::{
    flatten_word_expr, mod_extremum, mod_extremum_valid, solve_pump_count, suffix_threshold,
    ExtremumMode, ModExtremumResult, WordExpr,
};

/// The answer to one reachability question.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub reachable: bool,
    /// A checkable composition word. `None` when unreachable, and for the
    /// rare reachable instances whose encoding would exceed the run budget.
    pub witness: Option<RleWord>,
    /// Dispatch log, one line per decision step.
    pub trace: Vec<String>,
}

impl Verdict {
    fn unreachable(trace: Vec<String>) -> Self {
        Verdict { reachable: false, witness: None, trace }
    }
}

/// Resource footprint of a `decide` call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Largest expression the congruence pipeline held at once.
    pub peak_regex_nodes: usize,
    /// Normal-form clauses walked across all congruence analyses.
    pub total_clauses: usize,
}

/// Verdict plus resource statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    pub stats: SolveStats,
}

/// Decides reachability for `sys` under the given limits.
pub fn decide(sys: &AffineSystem, limits: &Limits) -> Result<Decision> {
    let mut ctx = Ctx { limits, stats: SolveStats::default(), memo: HashMap::new() };
    let mut verdict = decide_rec(sys, &mut ctx)?;
    // the verdict stands on its own; a witness is only reported when it
    // fits the configured run budget
    if verdict
        .witness
        .as_ref()
        .is_some_and(|w| w.runs.len() > limits.max_witness_runs)
    {
        verdict.witness = None;
        verdict.trace.push("witness withheld: exceeds the run budget".into());
    }
    Ok(Decision { verdict, stats: ctx.stats })
}

type MemoKey = (Vec<(BigInt, BigInt)>, BigInt, BigInt, Domain);

struct Ctx<'a> {
    limits: &'a Limits,
    stats: SolveStats,
    memo: HashMap<MemoKey, Verdict>,
}

fn memo_key(sys: &AffineSystem) -> MemoKey {
    (
        sys.maps().iter().map(|f| (f.a.clone(), f.b.clone())).collect(),
        sys.x.clone(),
        sys.y.clone(),
        sys.domain,
    )
}

fn decide_rec(sys: &AffineSystem, ctx: &mut Ctx) -> Result<Verdict> {
    let key = memo_key(sys);
    if let Some(hit) = ctx.memo.get(&key) {
        return Ok(hit.clone());
    }
    let verdict = match sys.domain {
        Domain::Integers => decide_z(sys, ctx),
        Domain::Naturals => decide_n(sys, ctx),
    }?;
    ctx.memo.insert(key, verdict.clone());
    Ok(verdict)
}

fn trivial_verdict() -> Verdict {
    Verdict {
        reachable: true,
        witness: Some(RleWord::empty()),
        trace: vec!["target equals start: the empty composition suffices".into()],
    }
}

fn position(sys: &AffineSystem, pred: impl Fn(&AffineMap) -> bool) -> Option<usize> {
    sys.maps().iter().position(pred).map(|i| i + 1)
}

fn decide_z(sys: &AffineSystem, ctx: &mut Ctx) -> Result<Verdict> {
    if sys.x == sys.y {
        return Ok(trivial_verdict());
    }
    if let Some(j) = position(sys, AffineMap::is_constant) {
        return constant_case(sys, j, ctx);
    }
    if let Some(j) = position(sys, AffineMap::is_identity) {
        return identity_case(sys, j, ctx);
    }
    if let Some(j) = position(sys, AffineMap::is_shift) {
        return shift_case(sys, j, ctx);
    }
    let reflections: Vec<usize> = sys
        .maps()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_involution())
        .map(|(i, _)| i + 1)
        .collect();
    if reflections.len() >= 2 {
        return paired_reflections_case(sys, reflections[0], reflections[1], ctx);
    }
    let trace = vec![if reflections.is_empty() {
        "every map expands distances: bounded window search".to_string()
    } else {
        "one reflection among expanding maps: widened window search".to_string()
    }];
    Ok(window_verdict(decide_expanding_z(sys, ctx.limits)?, trace))
}

fn decide_n(sys: &AffineSystem, ctx: &mut Ctx) -> Result<Verdict> {
    if sys.x == sys.y {
        return Ok(trivial_verdict());
    }
    if let Some(j) = position(sys, AffineMap::is_constant) {
        return constant_case(sys, j, ctx);
    }
    if let Some(j) = position(sys, |f| f.a.is_negative()) {
        return applicability_case(sys, j, ctx);
    }
    if let Some(j) = position(sys, AffineMap::is_identity) {
        return identity_case(sys, j, ctx);
    }
    if let Some(j) = position(sys, |f| f.is_shift() && f.b.is_negative()) {
        return shift_case(sys, j, ctx);
    }
    let trace = vec!["every map grows on large naturals: bounded window search".to_string()];
    Ok(window_verdict(decide_expanding_n(sys, ctx.limits)?, trace))
}

fn window_verdict(outcome: SearchOutcome, mut trace: Vec<String>) -> Verdict {
    match outcome {
        SearchOutcome::Reachable(path) => {
            trace.push(format!("window search found a path of {} steps", path.len()));
            Verdict { reachable: true, witness: Some(RleWord::from_word(&path)), trace }
        }
        SearchOutcome::Unreachable => {
            trace.push("window exhausted without meeting the target".into());
            Verdict::unreachable(trace)
        }
    }
}

/// Rewrites a word over a reduced system into count-1 runs over the parent
/// system, merging adjacent repeats.
fn remap_word(word: &Word, remap: &[usize]) -> RleWord {
    let mut out = RleWord::empty();
    for &i in &word.seq {
        out.push_run(RleRun::new(remap[i - 1], 1u32));
    }
    out
}

/// Renames the run indices of an encoded word over a reduced system.
fn remap_rle(rle: RleWord, remap: &[usize]) -> RleWord {
    let mut out = RleWord::empty();
    for run in rle.runs {
        out.push_run(RleRun::new(remap[run.index - 1], run.count));
    }
    out
}

fn constant_case(sys: &AffineSystem, j: usize, ctx: &mut Ctx) -> Result<Verdict> {
    let constant = sys.map(j)?.b.clone();
    let (reduced, remap) = sys.without(j);
    if sys.domain == Domain::Naturals && constant.is_negative() {
        let mut sub = decide_rec(&reduced, ctx)?;
        sub.witness = sub.witness.map(|w| remap_rle(w, &remap));
        let mut trace = vec![format!(
            "constant map {j} lands below zero and is never applicable: dropped"
        )];
        trace.extend(sub.trace);
        return Ok(Verdict { trace, ..sub });
    }

    let skip = decide_rec(&reduced, ctx)?;
    if skip.reachable {
        let mut trace = vec![format!("constant map {j}: reachable without using it")];
        trace.extend(skip.trace);
        return Ok(Verdict {
            reachable: true,
            witness: skip.witness.map(|w| remap_rle(w, &remap)),
            trace,
        });
    }
    let restarted = reduced.with_endpoints(constant.clone(), sys.y.clone())?;
    let reset = decide_rec(&restarted, ctx)?;
    if reset.reachable {
        let mut trace = vec![format!(
            "constant map {j}: reachable by resetting to {constant} with its last use"
        )];
        trace.extend(reset.trace);
        let witness = reset.witness.map(|w| {
            let mut out = RleWord::new(vec![RleRun::new(j, 1u32)]);
            for run in remap_rle(w, &remap).runs {
                out.push_run(run);
            }
            out
        });
        return Ok(Verdict { reachable: true, witness, trace });
    }
    let mut trace = vec![format!(
        "constant map {j}: unreachable both without it and from its value {constant}"
    )];
    trace.extend(skip.trace);
    trace.extend(reset.trace);
    Ok(Verdict::unreachable(trace))
}

fn identity_case(sys: &AffineSystem, j: usize, ctx: &mut Ctx) -> Result<Verdict> {
    let (reduced, remap) = sys.without(j);
    let mut sub = decide_rec(&reduced, ctx)?;
    sub.witness = sub.witness.map(|w| remap_rle(w, &remap));
    let mut trace = vec![format!("identity map {j} dropped")];
    trace.extend(sub.trace);
    Ok(Verdict { trace, ..sub })
}

/// Exact quotient of congruent values; the pipeline guarantees divisibility.
fn exact_quotient(diff: &BigInt, k: &BigInt) -> Result<BigInt> {
    let (q, r) = diff.div_rem(k);
    if !r.is_zero() {
        return Err(Error::Precondition(format!(
            "{diff} is not a multiple of the shift offset {k}"
        )));
    }
    Ok(q)
}

fn shift_case(sys: &AffineSystem, j: usize, ctx: &mut Ctx) -> Result<Verdict> {
    let k = sys.map(j)?.b.clone();
    let valid = sys.domain == Domain::Naturals;
    let mode = if k.is_negative() { ExtremumMode::Sup } else { ExtremumMode::Inf };
    let (reduced, remap) = sys.without(j);
    let outcome = if valid {
        mod_extremum_valid(&reduced, &k, ctx.limits)?
    } else {
        mod_extremum(&reduced, &k, mode, ctx.limits)?
    };
    ctx.stats.peak_regex_nodes = ctx.stats.peak_regex_nodes.max(outcome.peak_nodes);
    ctx.stats.total_clauses += outcome.clause_count;
    let end = match mode {
        ExtremumMode::Sup => "supremum",
        ExtremumMode::Inf => "infimum",
    };
    let head = format!("shift map {j} (offset {k}): {end} over the matching class mod {k}");

    match outcome.result {
        ModExtremumResult::Empty => Ok(Verdict::unreachable(vec![
            head,
            "no composition lands in the matching class: unreachable".into(),
        ])),
        ModExtremumResult::Finite { value, word } => {
            let ok = match mode {
                ExtremumMode::Sup => value >= sys.y,
                ExtremumMode::Inf => value <= sys.y,
            };
            if !ok {
                return Ok(Verdict::unreachable(vec![
                    head,
                    format!("class {end} {value} cannot be shifted onto {}", sys.y),
                ]));
            }
            let m = exact_quotient(&(&sys.y - &value), &k)?
                .to_biguint()
                .expect("shift count is nonnegative by the mode comparison");
            let mut witness = remap_word(&word, &remap);
            witness.push_run(RleRun::new(j, m.clone()));
            Ok(Verdict {
                reachable: true,
                witness: Some(witness),
                trace: vec![head, format!("class {end} {value}, then {m} shifts: reachable")],
            })
        }
        ModExtremumResult::Unbounded { prefix, prefix_value, cycle, suffix } => {
            let trace = vec![
                head,
                format!("class {end} unbounded through a repeatable block: reachable"),
            ];
            // the verdict is settled; witness assembly is best-effort and
            // may hit the run or size budget on adversarial pump counts
            let witness = match pumped_witness(
                &reduced, sys, &k, mode, valid, prefix, prefix_value, cycle, suffix, ctx.limits,
            ) {
                Ok((w, m)) => {
                    let mut w = remap_rle(w, &remap);
                    w.push_run(RleRun::new(j, m));
                    Some(w)
                }
                Err(Error::WitnessUnavailable) | Err(Error::ResourceExceeded(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(Verdict { reachable: true, witness, trace })
        }
        ModExtremumResult::NegativeUnbounded { word } => {
            let trace = vec![
                head,
                "a matching composition passes through a negative slope: both ends of the class are reachable".into(),
            ];
            let witness = negative_case_witness(&reduced, sys, &k, &word, &remap, j)?;
            Ok(Verdict { reachable: true, witness, trace })
        }
    }
}

/// Builds the pumped word for an unbounded class: pump the improving block
/// until the clause suffix lands on the shiftable side of the target, then
/// count the final shifts. Returns the encoded word over the reduced system
/// plus the shift count.
#[allow(clippy::too_many_arguments)]
fn pumped_witness(
    reduced: &AffineSystem,
    sys: &AffineSystem,
    k: &BigInt,
    mode: ExtremumMode,
    valid: bool,
    prefix: Word,
    prefix_value: BigInt,
    cycle: WordExpr,
    suffix: Word,
    limits: &Limits,
) -> Result<(RleWord, BigUint)> {
    let threshold = suffix_threshold(reduced, &suffix, &sys.y, mode, valid)?;
    let pump = cycle.composed_map(reduced)?;
    let count = solve_pump_count(&pump, &prefix_value, &threshold, mode)?;
    let mut landing = pump.pow_apply(&count, &prefix_value)?;
    for &i in &suffix.seq {
        landing = apply(reduced.map(i)?, &landing);
    }
    let m = exact_quotient(&(&sys.y - &landing), k)?
        .to_biguint()
        .expect("shift count is nonnegative by the threshold choice");
    let mut parts: Vec<WordExpr> = prefix.seq.iter().map(|&i| WordExpr::Lit(i)).collect();
    parts.push(WordExpr::Pow(Box::new(cycle), count));
    parts.extend(suffix.seq.iter().map(|&i| WordExpr::Lit(i)));
    let rle = flatten_word_expr(&WordExpr::Seq(parts), reduced, limits)?;
    Ok((rle, m))
}

/// Witness for the negative-slope unbounded case: take a matching word
/// through a negative slope; if the plain shift count would be negative,
/// insert shifts just before its last negative-slope letter, where the
/// suffix slope product is negative, so each inserted shift moves the final
/// value against the shift direction.
fn negative_case_witness(
    reduced: &AffineSystem,
    sys: &AffineSystem,
    k: &BigInt,
    word: &Word,
    remap: &[usize],
    j: usize,
) -> Result<Option<RleWord>> {
    let mut value = sys.x.clone();
    for &i in &word.seq {
        value = apply(reduced.map(i)?, &value);
    }
    let direct = exact_quotient(&(&sys.y - &value), k)?;
    if !direct.is_negative() {
        let mut w = remap_word(word, remap);
        w.push_run(RleRun::new(j, direct.to_biguint().expect("checked sign")));
        return Ok(Some(w));
    }
    let last_negative = word
        .seq
        .iter()
        .rposition(|&i| reduced.maps()[i - 1].a.is_negative())
        .expect("the word passes through a negative slope");
    let tail_slope: BigInt = word.seq[last_negative..]
        .iter()
        .map(|&i| reduced.maps()[i - 1].a.clone())
        .product();
    let swing = k * &tail_slope;
    debug_assert!(tail_slope.is_negative());
    let inserted = (&value - &sys.y)
        .abs()
        .div_ceil(&swing.abs())
        .to_biguint()
        .expect("magnitudes are nonnegative");
    let landed = &value + BigInt::from(inserted.clone()) * &swing;
    let m = exact_quotient(&(&sys.y - &landed), k)?
        .to_biguint()
        .expect("overshoot put the landing on the shiftable side");
    let mut w = remap_word(&Word::new(word.seq[..last_negative].to_vec()), remap);
    w.push_run(RleRun::new(j, inserted));
    for run in remap_word(&Word::new(word.seq[last_negative..].to_vec()), remap).runs {
        w.push_run(run);
    }
    w.push_run(RleRun::new(j, m));
    Ok(Some(w))
}

/// Two reflections compose to a shift, which unlocks the congruence case.
fn paired_reflections_case(
    sys: &AffineSystem,
    first: usize,
    second: usize,
    ctx: &mut Ctx,
) -> Result<Verdict> {
    let composed = sys.map(second)?.then(sys.map(first)?);
    debug_assert!(composed.is_shift());
    let mut maps = sys.maps().to_vec();
    maps.push(composed.clone());
    let extended = AffineSystem::new(maps, sys.x.clone(), sys.y.clone(), sys.domain)?;
    if extended.len() != sys.len() + 1 {
        return Err(Error::Precondition(
            "composed reflection shift collided with an existing map".into(),
        ));
    }
    let g = extended.len();
    let sub = decide_rec(&extended, ctx)?;
    let mut trace = vec![format!(
        "reflections {first} and {second} compose to the shift {composed}: \
         solving for the original target with it available"
    )];
    trace.extend(sub.trace);
    let witness = match sub.witness {
        Some(w) if sub.reachable => expand_composed_runs(w, g, second, first, ctx.limits),
        other => other,
    };
    Ok(Verdict { reachable: sub.reachable, witness, trace })
}

/// Replaces runs of the composed shift by alternating applications of the
/// two reflections (second first). Gives up when the expansion would exceed
/// the run budget.
fn expand_composed_runs(
    rle: RleWord,
    composed_index: usize,
    second: usize,
    first: usize,
    limits: &Limits,
) -> Option<RleWord> {
    let mut out = RleWord::empty();
    for run in rle.runs {
        if run.index != composed_index {
            out.push_run(run);
            continue;
        }
        let pairs = run.count.to_usize()?;
        if out.runs.len() + 2 * pairs > limits.max_witness_runs {
            return None;
        }
        for _ in 0..pairs {
            out.push_run(RleRun::new(second, 1u32));
            out.push_run(RleRun::new(first, 1u32));
        }
    }
    Some(out)
}

/// A negative-slope map over the naturals is applicable only on the finite
/// range where its image stays nonnegative. Reachability becomes a search
/// over anchor values (that range, its image, and the endpoints) whose
/// edges are the map itself and recursive decisions without it.
fn applicability_case(sys: &AffineSystem, j: usize, ctx: &mut Ctx) -> Result<Verdict> {
    let f = sys.map(j)?.clone();
    let (reduced, remap) = sys.without(j);
    if f.b.is_negative() {
        let mut sub = decide_rec(&reduced, ctx)?;
        sub.witness = sub.witness.map(|w| remap_rle(w, &remap));
        let mut trace = vec![format!(
            "map {j} sends every natural below zero and is never applicable: dropped"
        )];
        trace.extend(sub.trace);
        return Ok(Verdict { trace, ..sub });
    }
    let ceiling = f.b.div_floor(&f.a.abs());
    let budget = BigInt::from(ctx.limits.max_applicability_vertices);
    if &ceiling + 2 > budget {
        return Err(Error::ResourceExceeded(format!(
            "applicability range 0..={ceiling} exceeds {} anchor values",
            ctx.limits.max_applicability_vertices
        )));
    }
    let mut anchors: BTreeSet<BigInt> = BTreeSet::new();
    let mut v = BigInt::zero();
    while v <= ceiling {
        anchors.insert(apply(&f, &v));
        anchors.insert(v.clone());
        v += 1;
    }
    anchors.insert(sys.x.clone());
    anchors.insert(sys.y.clone());
    if anchors.len() > ctx.limits.max_applicability_vertices {
        return Err(Error::ResourceExceeded(format!(
            "{} anchor values exceed the configured cap",
            anchors.len()
        )));
    }
    let head = format!(
        "map {j} shrinks: applicable only on 0..={ceiling}; anchored search over {} values",
        anchors.len()
    );

    // breadth-first search over anchors; edges are one application of the
    // map, or a recursive decision between anchors without it
    enum Edge {
        Apply,
        Segment(Option<RleWord>),
    }
    let mut parents: BTreeMap<BigInt, (BigInt, Edge)> = BTreeMap::new();
    let mut queue = VecDeque::from([sys.x.clone()]);
    let mut found = false;
    'search: while let Some(at) = queue.pop_front() {
        // the map edge
        if at <= ceiling && !at.is_negative() {
            let to = apply(&f, &at);
            if to != sys.x && !parents.contains_key(&to) {
                parents.insert(to.clone(), (at.clone(), Edge::Apply));
                if to == sys.y {
                    found = true;
                    break 'search;
                }
                queue.push_back(to);
            }
        }
        // segment edges to every other anchor
        for target in &anchors {
            if *target == at || *target == sys.x || parents.contains_key(target) {
                continue;
            }
            let segment = reduced.with_endpoints(at.clone(), target.clone())?;
            let sub = decide_rec(&segment, ctx)?;
            if !sub.reachable {
                continue;
            }
            let witness = sub.witness.map(|w| remap_rle(w, &remap));
            parents.insert(target.clone(), (at.clone(), Edge::Segment(witness)));
            if *target == sys.y {
                found = true;
                break 'search;
            }
            queue.push_back(target.clone());
        }
    }
    if !found {
        return Ok(Verdict::unreachable(vec![
            head,
            "anchored search exhausted without meeting the target".into(),
        ]));
    }
    // stitch the path back together
    let mut pieces: Vec<Option<RleWord>> = Vec::new();
    let mut at = sys.y.clone();
    let mut hops = 0usize;
    while at != sys.x {
        let (prev, edge) = parents.remove(&at).expect("path is connected");
        match edge {
            Edge::Apply => pieces.push(Some(RleWord::new(vec![RleRun::new(j, 1u32)]))),
            Edge::Segment(w) => pieces.push(w),
        }
        at = prev;
        hops += 1;
    }
    pieces.reverse();
    let witness = pieces.into_iter().try_fold(RleWord::empty(), |mut acc, piece| {
        let piece = piece?;
        for run in piece.runs {
            acc.push_run(run);
        }
        Some(acc)
    });
    Ok(Verdict {
        reachable: true,
        witness,
        trace: vec![head, format!("anchored path found after {hops} hops: reachable")],
    })
}
