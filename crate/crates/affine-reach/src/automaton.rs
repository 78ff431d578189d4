//! Congruence automata: finite automata over map indices that track the
//! current value modulo a fixed offset, plus conversion to an equivalent
//! regular expression by state elimination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::affine::{AffineSystem, Word};
use crate::config::Limits;
use crate::error::{Error, Result};
use crate::regex::{checked_concat, checked_star, checked_union, Regex};

/// A complete deterministic automaton over the alphabet `{1, ..., letters}`.
///
/// States are `0..states`; `transitions[s][i - 1]` is the successor of state
/// `s` on letter `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModAutomaton {
    pub states: usize,
    pub letters: usize,
    pub start: usize,
    pub accept: usize,
    pub transitions: Vec<Vec<usize>>,
}

impl ModAutomaton {
    pub fn new(
        states: usize,
        letters: usize,
        start: usize,
        accept: usize,
        transitions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if states == 0 {
            return Err(Error::Precondition("automaton needs at least one state".into()));
        }
        if start >= states || accept >= states {
            return Err(Error::Precondition(
                "start and accept states must be in range".into(),
            ));
        }
        if transitions.len() != states
            || transitions
                .iter()
                .any(|row| row.len() != letters || row.iter().any(|&t| t >= states))
        {
            return Err(Error::Precondition(
                "transition table must be a complete states x letters map".into(),
            ));
        }
        Ok(ModAutomaton { states, letters, start, accept, transitions })
    }

    /// Runs the automaton on `word` and reports acceptance. Letters must be
    /// in `1..=letters`.
    pub fn accepts(&self, word: &Word) -> bool {
        let mut state = self.start;
        for &i in &word.seq {
            assert!(i >= 1 && i <= self.letters, "letter {i} out of range");
            state = self.transitions[state][i - 1];
        }
        state == self.accept
    }
}

/// Builds the automaton that accepts exactly the words `w` over the maps of
/// `sys` with `P_w(x) = y (mod |k|)`, where `P_w` is the composite map of
/// `w`. States are residues modulo `|k|`.
pub fn build_mod_automaton(sys: &AffineSystem, k: &BigInt, limits: &Limits) -> Result<ModAutomaton> {
    if k.is_zero() {
        return Err(Error::Precondition("congruence offset must be nonzero".into()));
    }
    let modulus = k.abs();
    let states = match modulus.to_usize() {
        Some(m) if m <= limits.max_automaton_states => m,
        _ => {
            return Err(Error::ResourceExceeded(format!(
                "congruence automaton needs |{k}| states, cap is {}",
                limits.max_automaton_states
            )))
        }
    };
    let residue = |z: &BigInt| -> usize {
        // mod_floor lands in [0, modulus) even for negative z
        z.mod_floor(&modulus).to_usize().expect("residue fits")
    };
    let letters = sys.len();
    let mut transitions = vec![vec![0usize; letters]; states];
    for (col, f) in sys.maps().iter().enumerate() {
        let am = residue(&f.a) as u64;
        let bm = residue(&f.b) as u64;
        let m = states as u64;
        for (s, row) in transitions.iter_mut().enumerate() {
            row[col] = ((am * s as u64 + bm) % m) as usize;
        }
    }
    ModAutomaton::new(states, letters, residue(&sys.x), residue(&sys.y), transitions)
}

/// True when the accept state is reachable from the start state, i.e. the
/// automaton's language is nonempty.
pub fn mod_reachable(aut: &ModAutomaton) -> bool {
    reachable_from(aut, aut.start).contains(&aut.accept)
}

fn reachable_from(aut: &ModAutomaton, origin: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([origin]);
    let mut queue = VecDeque::from([origin]);
    while let Some(s) = queue.pop_front() {
        for &t in &aut.transitions[s] {
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen
}

fn coreachable_to(aut: &ModAutomaton, target: usize) -> BTreeSet<usize> {
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); aut.states];
    for (s, row) in aut.transitions.iter().enumerate() {
        for &t in row {
            preds[t].insert(s);
        }
    }
    let mut seen = BTreeSet::from([target]);
    let mut queue = VecDeque::from([target]);
    while let Some(s) = queue.pop_front() {
        for &p in &preds[s] {
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    seen
}

/// Edge labels of the generalized automaton during elimination; `None`
/// stands for "no edge" and is simplified away eagerly.
type EdgeMap = BTreeMap<(usize, usize), Regex>;

fn o_union(a: Option<Regex>, b: Option<Regex>, limits: &Limits) -> Result<Option<Regex>> {
    match (a, b) {
        (None, b) => Ok(b),
        (a, None) => Ok(a),
        (Some(a), Some(b)) if a == b => Ok(Some(a)),
        (Some(a), Some(b)) => Ok(Some(checked_union(a, b, limits)?)),
    }
}

fn o_concat(a: Option<Regex>, b: Option<Regex>, limits: &Limits) -> Result<Option<Regex>> {
    match (a, b) {
        (None, _) | (_, None) => Ok(None),
        (Some(a), Some(b)) if a.is_epsilon() => Ok(Some(b)),
        (Some(a), Some(b)) if b.is_epsilon() => Ok(Some(a)),
        (Some(a), Some(b)) => Ok(Some(checked_concat(a, b, limits)?)),
    }
}

fn o_star(a: Option<Regex>, limits: &Limits) -> Result<Regex> {
    match a {
        None => Ok(Regex::epsilon()),
        Some(r) if r.is_epsilon() => Ok(Regex::epsilon()),
        Some(r) => checked_star(r, limits),
    }
}

/// `X* Y (W | Z X* Y)*` for the two-state generalized automaton with loop
/// `X` on the start, forward edge `Y`, back edge `Z` and loop `W` on the
/// accept state.
fn two_state_formula(
    x: Option<Regex>,
    y: Option<Regex>,
    z: Option<Regex>,
    w: Option<Regex>,
    limits: &Limits,
) -> Result<Regex> {
    let sx = o_star(x, limits)?;
    let xy = o_concat(Some(sx), y, limits)?;
    let zxy = o_concat(z, xy.clone(), limits)?;
    let body = o_union(w, zxy, limits)?;
    let tail = o_star(body, limits)?;
    Ok(o_concat(xy, Some(tail), limits)?.unwrap_or_else(Regex::empty))
}

/// Removes `q` from the edge map, rerouting every path through `q` with the
/// usual `A S* B` composition.
fn eliminate_state(edges: &mut EdgeMap, q: usize, limits: &Limits) -> Result<()> {
    let self_loop = edges.remove(&(q, q));
    let incoming: Vec<(usize, Regex)> = edges
        .iter()
        .filter(|((p, t), _)| *t == q && *p != q)
        .map(|((p, _), r)| (*p, r.clone()))
        .collect();
    let outgoing: Vec<(usize, Regex)> = edges
        .iter()
        .filter(|((s, r), _)| *s == q && *r != q)
        .map(|((_, r), l)| (*r, l.clone()))
        .collect();
    edges.retain(|(p, t), _| *p != q && *t != q);
    let star = o_star(self_loop, limits)?;
    for (p, a) in &incoming {
        for (r, b) in &outgoing {
            let through = o_concat(
                Some(a.clone()),
                o_concat(Some(star.clone()), Some(b.clone()), limits)?,
                limits,
            )?;
            let merged = o_union(edges.get(&(*p, *r)).cloned(), through, limits)?;
            if let Some(label) = merged {
                edges.insert((*p, *r), label);
            }
        }
    }
    Ok(())
}

/// Converts the automaton to a regular expression with the same language by
/// eliminating states in increasing index order. States that cannot lie on
/// an accepting path are dropped up front.
pub fn automaton_to_regex(aut: &ModAutomaton, limits: &Limits) -> Result<Regex> {
    let useful: BTreeSet<usize> = reachable_from(aut, aut.start)
        .intersection(&coreachable_to(aut, aut.accept))
        .copied()
        .collect();
    if !useful.contains(&aut.start) || !useful.contains(&aut.accept) {
        return Ok(Regex::empty());
    }

    let mut edges: EdgeMap = BTreeMap::new();
    for &s in &useful {
        for (col, &t) in aut.transitions[s].iter().enumerate() {
            if useful.contains(&t) {
                let lit = Regex::literal(col + 1);
                let merged = o_union(edges.remove(&(s, t)), Some(lit), limits)?;
                edges.insert((s, t), merged.expect("union of a literal is an edge"));
            }
        }
    }

    if aut.start == aut.accept {
        // A fresh start and accept pair keeps the single kept state
        // eliminable; epsilon is represented by the missing-edge case.
        let fresh_start = aut.states;
        let fresh_accept = aut.states + 1;
        edges.insert((fresh_start, aut.start), Regex::epsilon());
        edges.insert((aut.accept, fresh_accept), Regex::epsilon());
        for &q in &useful {
            eliminate_state(&mut edges, q, limits)?;
        }
        let body = edges.get(&(fresh_start, fresh_accept)).cloned();
        // The empty word is always accepted here.
        Ok(o_union(Some(Regex::epsilon()), body, limits)?.expect("epsilon present"))
    } else {
        for &q in &useful {
            if q == aut.start || q == aut.accept {
                continue;
            }
            eliminate_state(&mut edges, q, limits)?;
        }
        let x = edges.remove(&(aut.start, aut.start));
        let y = edges.remove(&(aut.start, aut.accept));
        let z = edges.remove(&(aut.accept, aut.start));
        let w = edges.remove(&(aut.accept, aut.accept));
        two_state_formula(x, y, z, w, limits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::Domain;
    use crate::regex::enumerate_language;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn limits() -> Limits {
        Limits::default()
    }

    fn doubling_plus_one_mod_3() -> ModAutomaton {
        let sys = AffineSystem::from_i64(&[(2, 1)], 0, 6, Domain::Integers).unwrap();
        build_mod_automaton(&sys, &BigInt::from(-3), &limits()).unwrap()
    }

    #[test]
    fn congruence_transitions_and_acceptance() {
        let aut = doubling_plus_one_mod_3();
        assert_eq!(aut.states, 3);
        assert_eq!(aut.start, 0);
        assert_eq!(aut.accept, 0);
        // r -> 2r + 1 mod 3: 0 -> 1 -> 0, 2 -> 2
        assert_eq!(aut.transitions, vec![vec![1], vec![0], vec![2]]);
        assert!(aut.accepts(&Word::empty()));
        assert!(!aut.accepts(&Word::new(vec![1])));
        assert!(aut.accepts(&Word::new(vec![1, 1])));
        assert!(mod_reachable(&aut));
    }

    #[test]
    fn congruence_start_uses_floor_residues() {
        let sys = AffineSystem::from_i64(&[(1, 2)], -5, 7, Domain::Integers).unwrap();
        let aut = build_mod_automaton(&sys, &BigInt::from(4), &limits()).unwrap();
        assert_eq!(aut.start, 3); // -5 mod 4
        assert_eq!(aut.accept, 3);
    }

    #[test]
    fn elimination_reproduces_parity_cycle_expression() {
        let aut = doubling_plus_one_mod_3();
        let r = automaton_to_regex(&aut, &limits()).unwrap();
        let expected = Regex::union(vec![
            Regex::epsilon(),
            Regex::concat(vec![
                Regex::literal(1),
                Regex::star(Regex::concat(vec![Regex::literal(1), Regex::literal(1)])),
                Regex::literal(1),
            ]),
        ]);
        assert_eq!(r, expected, "got {r}");
    }

    #[test]
    fn unreachable_accept_gives_empty_expression() {
        // Letter 1 maps everything to state 0; accept state 1 is unreachable.
        let aut = ModAutomaton::new(2, 1, 0, 1, vec![vec![0], vec![0]]).unwrap();
        assert!(!mod_reachable(&aut));
        assert_eq!(automaton_to_regex(&aut, &limits()).unwrap(), Regex::empty());
    }

    fn brute_language(aut: &ModAutomaton, max_len: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        let mut layer: Vec<(usize, Vec<usize>)> = vec![(aut.start, Vec::new())];
        if aut.start == aut.accept {
            out.insert(Vec::new());
        }
        for _ in 0..max_len {
            let mut next = Vec::new();
            for (s, w) in layer {
                for i in 1..=aut.letters {
                    let t = aut.transitions[s][i - 1];
                    let mut w2 = w.clone();
                    w2.push(i);
                    if t == aut.accept {
                        out.insert(w2.clone());
                    }
                    next.push((t, w2));
                }
            }
            layer = next;
        }
        out
    }

    #[test]
    fn elimination_preserves_language_on_random_automata() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let states = rng.gen_range(1..=4);
            let letters = rng.gen_range(1..=3);
            let transitions: Vec<Vec<usize>> = (0..states)
                .map(|_| (0..letters).map(|_| rng.gen_range(0..states)).collect())
                .collect();
            let aut = ModAutomaton::new(
                states,
                letters,
                rng.gen_range(0..states),
                rng.gen_range(0..states),
                transitions,
            )
            .unwrap();
            let r = automaton_to_regex(&aut, &limits()).unwrap();
            let from_regex: BTreeSet<Vec<usize>> = enumerate_language(&r, 6, &limits())
                .unwrap()
                .into_iter()
                .map(|w| w.seq)
                .collect();
            assert_eq!(from_regex, brute_language(&aut, 6), "language mismatch for {r}");
        }
    }

    #[test]
    fn modulus_above_state_cap_is_rejected() {
        let sys = AffineSystem::from_i64(&[(2, 1)], 0, 6, Domain::Integers).unwrap();
        let err = build_mod_automaton(&sys, &BigInt::from(1_000_000), &limits()).unwrap_err();
        assert!(matches!(err, Error::ResourceExceeded(_)));
    }
}
