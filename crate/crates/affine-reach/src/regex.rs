//! Regular expressions over map indices, with the normalization passes used
//! by the congruence pipeline: empty-set elimination, disjunctive normal
//! form, and bounded language enumeration.
//!
//! Every node caches its subtree size so construction-time budget checks are
//! O(1). The pipeline combinators check the budget *before* allocating, so a
//! configured node cap is also a bound on peak memory.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Signed;

use crate::affine::{AffineSystem, Word};
use crate::config::Limits;
use crate::error::{Error, Result};

/// A regular expression over 1-based map indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Regex {
    kind: RegexKind,
    size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RegexKind {
    Empty,
    Epsilon,
    Literal(usize),
    Concat(Vec<Regex>),
    Union(Vec<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn empty() -> Self {
        Regex { kind: RegexKind::Empty, size: 1 }
    }

    pub fn epsilon() -> Self {
        Regex { kind: RegexKind::Epsilon, size: 1 }
    }

    pub fn literal(index: usize) -> Self {
        Regex { kind: RegexKind::Literal(index), size: 1 }
    }

    /// Concatenation; nested concatenations are flattened, and fewer than two
    /// children collapse to epsilon or the single child.
    pub fn concat(children: Vec<Regex>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c.kind {
                RegexKind::Concat(cs) => flat.extend(cs),
                _ => flat.push(c),
            }
        }
        match flat.len() {
            0 => Regex::epsilon(),
            1 => flat.pop().unwrap(),
            _ => {
                let size = 1 + flat.iter().map(|c| c.size).sum::<usize>();
                Regex { kind: RegexKind::Concat(flat), size }
            }
        }
    }

    /// Union; nested unions are flattened, duplicate alternatives collapse
    /// to their first occurrence, zero children is the empty set.
    pub fn union(children: Vec<Regex>) -> Self {
        let mut flat: Vec<Regex> = Vec::with_capacity(children.len());
        let keep = |flat: &mut Vec<Regex>, c: Regex| {
            if !flat.contains(&c) {
                flat.push(c);
            }
        };
        for c in children {
            match c.kind {
                RegexKind::Union(cs) => {
                    for inner in cs {
                        keep(&mut flat, inner);
                    }
                }
                _ => keep(&mut flat, c),
            }
        }
        match flat.len() {
            0 => Regex::empty(),
            1 => flat.pop().unwrap(),
            _ => {
                let size = 1 + flat.iter().map(|c| c.size).sum::<usize>();
                Regex { kind: RegexKind::Union(flat), size }
            }
        }
    }

    /// Kleene star; an immediately nested star collapses.
    pub fn star(inner: Regex) -> Self {
        if matches!(inner.kind, RegexKind::Star(_)) {
            return inner;
        }
        let size = 1 + inner.size;
        Regex { kind: RegexKind::Star(Box::new(inner)), size }
    }

    pub fn kind(&self) -> &RegexKind {
        &self.kind
    }

    /// Total node count.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_empty_set(&self) -> bool {
        matches!(self.kind, RegexKind::Empty)
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self.kind, RegexKind::Epsilon)
    }

    /// True when no `Empty` node occurs anywhere in the tree.
    pub fn is_empty_free(&self) -> bool {
        match &self.kind {
            RegexKind::Empty => false,
            RegexKind::Epsilon | RegexKind::Literal(_) => true,
            RegexKind::Concat(cs) | RegexKind::Union(cs) => cs.iter().all(Regex::is_empty_free),
            RegexKind::Star(b) => b.is_empty_free(),
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RegexKind::Empty => write!(f, "0"),
            RegexKind::Epsilon => write!(f, "e"),
            RegexKind::Literal(i) => write!(f, "{i}"),
            RegexKind::Concat(cs) => {
                for c in cs {
                    if matches!(c.kind, RegexKind::Union(_)) {
                        write!(f, "({c})")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                Ok(())
            }
            RegexKind::Union(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            RegexKind::Star(b) => {
                if matches!(b.kind, RegexKind::Literal(_) | RegexKind::Epsilon | RegexKind::Empty) {
                    write!(f, "{b}*")
                } else {
                    write!(f, "({b})*")
                }
            }
        }
    }
}

/// Budget-checked concatenation used by pipeline stages. Fails *before*
/// allocating when the combined size would exceed the cap.
pub(crate) fn checked_concat(a: Regex, b: Regex, limits: &Limits) -> Result<Regex> {
    if a.size() + b.size() + 1 > limits.max_regex_nodes {
        return Err(Error::ResourceExceeded(format!(
            "regex would exceed {} nodes",
            limits.max_regex_nodes
        )));
    }
    Ok(Regex::concat(vec![a, b]))
}

/// Budget-checked union.
pub(crate) fn checked_union(a: Regex, b: Regex, limits: &Limits) -> Result<Regex> {
    if a.size() + b.size() + 1 > limits.max_regex_nodes {
        return Err(Error::ResourceExceeded(format!(
            "regex would exceed {} nodes",
            limits.max_regex_nodes
        )));
    }
    Ok(Regex::union(vec![a, b]))
}

/// Budget-checked star.
pub(crate) fn checked_star(inner: Regex, limits: &Limits) -> Result<Regex> {
    if inner.size() + 1 > limits.max_regex_nodes {
        return Err(Error::ResourceExceeded(format!(
            "regex would exceed {} nodes",
            limits.max_regex_nodes
        )));
    }
    Ok(Regex::star(inner))
}

/// Removes `Empty` nodes by the identities `E|0 = E`, `E 0 = 0`, `0* = e`.
/// The result either is the single node `Empty` or contains no `Empty` at
/// all; node count never increases.
pub fn eliminate_empty(r: &Regex) -> Regex {
    match &r.kind {
        RegexKind::Empty | RegexKind::Epsilon | RegexKind::Literal(_) => r.clone(),
        RegexKind::Concat(cs) => {
            let mut out = Vec::with_capacity(cs.len());
            for c in cs {
                let c = eliminate_empty(c);
                if c.is_empty_set() {
                    return Regex::empty();
                }
                out.push(c);
            }
            Regex::concat(out)
        }
        RegexKind::Union(cs) => {
            let out: Vec<Regex> = cs
                .iter()
                .map(eliminate_empty)
                .filter(|c| !c.is_empty_set())
                .collect();
            Regex::union(out)
        }
        RegexKind::Star(b) => {
            let b = eliminate_empty(b);
            if b.is_empty_set() {
                Regex::epsilon()
            } else {
                Regex::star(b)
            }
        }
    }
}

/// True when some literal of `r` names a map with a negative linear
/// coefficient. Expects an empty-set-free expression.
pub fn has_negative_literal(r: &Regex, sys: &AffineSystem) -> Result<bool> {
    match &r.kind {
        RegexKind::Empty | RegexKind::Epsilon => Ok(false),
        RegexKind::Literal(i) => Ok(sys.map(*i)?.a.is_negative()),
        RegexKind::Concat(cs) | RegexKind::Union(cs) => {
            for c in cs {
                if has_negative_literal(c, sys)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        RegexKind::Star(b) => has_negative_literal(b, sys),
    }
}

/// One factor of a union-free clause: a literal or a starred union-free
/// expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Literal(usize),
    Star(Regex),
}

impl Factor {
    fn size(&self) -> usize {
        match self {
            Factor::Literal(_) => 1,
            Factor::Star(r) => r.size() + 1,
        }
    }

    pub fn to_regex(&self) -> Regex {
        match self {
            Factor::Literal(i) => Regex::literal(*i),
            Factor::Star(r) => Regex::star(r.clone()),
        }
    }
}

/// A union-free concatenation of factors; the empty factor list denotes
/// epsilon.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Clause {
    pub factors: Vec<Factor>,
}

impl Clause {
    pub fn new(factors: Vec<Factor>) -> Self {
        Clause { factors }
    }

    pub fn size(&self) -> usize {
        1 + self.factors.iter().map(Factor::size).sum::<usize>()
    }

    pub fn to_regex(&self) -> Regex {
        Regex::concat(self.factors.iter().map(Factor::to_regex).collect())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "e");
        }
        write!(f, "{}", self.to_regex())
    }
}

/// Rewrites an empty-set-free expression into a union of union-free clauses
/// whose languages cover the original:
/// concatenation distributes over union, and a union under a star is
/// rewritten by `(A|B)* = (A* B*)*` so star bodies become concatenations of
/// stars without expanding further.
pub fn to_dnf(r: &Regex, limits: &Limits) -> Result<Vec<Clause>> {
    let clauses = dnf_rec(r, limits)?;
    Ok(clauses)
}

fn dnf_budget_check(clauses: &[Clause], limits: &Limits) -> Result<()> {
    let total: usize = clauses.iter().map(Clause::size).sum();
    if total > limits.max_regex_nodes {
        return Err(Error::ResourceExceeded(format!(
            "normal form would exceed {} nodes",
            limits.max_regex_nodes
        )));
    }
    Ok(())
}

fn dnf_rec(r: &Regex, limits: &Limits) -> Result<Vec<Clause>> {
    match &r.kind {
        RegexKind::Empty => Err(Error::Precondition(
            "normal form requires an empty-set-free expression".into(),
        )),
        RegexKind::Epsilon => Ok(vec![Clause::default()]),
        RegexKind::Literal(i) => Ok(vec![Clause::new(vec![Factor::Literal(*i)])]),
        RegexKind::Star(b) => {
            let factors = match star_factor(b, limits)? {
                Some(f) => vec![f],
                None => Vec::new(),
            };
            Ok(vec![Clause::new(factors)])
        }
        RegexKind::Union(cs) => {
            let mut out = Vec::new();
            for c in cs {
                out.extend(dnf_rec(c, limits)?);
                dnf_budget_check(&out, limits)?;
            }
            Ok(out)
        }
        RegexKind::Concat(cs) => {
            let mut acc = vec![Clause::default()];
            for c in cs {
                let child = dnf_rec(c, limits)?;
                let mut next = Vec::with_capacity(acc.len() * child.len());
                for left in &acc {
                    for right in &child {
                        let mut factors = left.factors.clone();
                        factors.extend(right.factors.iter().cloned());
                        next.push(Clause::new(factors));
                    }
                }
                dnf_budget_check(&next, limits)?;
                acc = next;
            }
            Ok(acc)
        }
    }
}

/// Turns a star body into a single union-free star factor, or `None` when
/// the body's language is `{epsilon}` and the star contributes nothing.
fn star_factor(body: &Regex, limits: &Limits) -> Result<Option<Factor>> {
    let clauses = dnf_rec(body, limits)?;
    let mut nonempty: Vec<Clause> = clauses.into_iter().filter(|c| !c.factors.is_empty()).collect();
    match nonempty.len() {
        0 => Ok(None),
        1 => Ok(Some(Factor::Star(nonempty.pop().unwrap().to_regex()))),
        _ => {
            // (C1|...|Cn)* = (C1* C2* ... Cn*)*
            let stars: Vec<Regex> = nonempty.iter().map(|c| Regex::star(c.to_regex())).collect();
            let combined = Regex::concat(stars);
            if combined.size() + 1 > limits.max_regex_nodes {
                return Err(Error::ResourceExceeded(format!(
                    "star body normal form would exceed {} nodes",
                    limits.max_regex_nodes
                )));
            }
            Ok(Some(Factor::Star(combined)))
        }
    }
}

/// All words of `L(r)` with length at most `max_len`, as a sorted set.
pub fn enumerate_language(r: &Regex, max_len: usize, limits: &Limits) -> Result<BTreeSet<Word>> {
    let raw = enum_rec(r, max_len, limits)?;
    Ok(raw.into_iter().map(Word::new).collect())
}

fn cap_check(set: &BTreeSet<Vec<usize>>, limits: &Limits) -> Result<()> {
    if set.len() > limits.max_language_words {
        return Err(Error::ResourceExceeded(format!(
            "language sample exceeds {} words",
            limits.max_language_words
        )));
    }
    Ok(())
}

fn enum_rec(r: &Regex, max_len: usize, limits: &Limits) -> Result<BTreeSet<Vec<usize>>> {
    let mut out = BTreeSet::new();
    match &r.kind {
        RegexKind::Empty => {}
        RegexKind::Epsilon => {
            out.insert(Vec::new());
        }
        RegexKind::Literal(i) => {
            if max_len >= 1 {
                out.insert(vec![*i]);
            }
        }
        RegexKind::Union(cs) => {
            for c in cs {
                out.extend(enum_rec(c, max_len, limits)?);
                cap_check(&out, limits)?;
            }
        }
        RegexKind::Concat(cs) => {
            out.insert(Vec::new());
            for c in cs {
                let child = enum_rec(c, max_len, limits)?;
                let mut next = BTreeSet::new();
                for left in &out {
                    for right in &child {
                        if left.len() + right.len() <= max_len {
                            let mut w = left.clone();
                            w.extend(right.iter().copied());
                            next.insert(w);
                        }
                    }
                }
                cap_check(&next, limits)?;
                out = next;
            }
        }
        RegexKind::Star(b) => {
            let body = enum_rec(b, max_len, limits)?;
            out.insert(Vec::new());
            let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
            while let Some(w) = frontier.pop() {
                for piece in &body {
                    if piece.is_empty() || w.len() + piece.len() > max_len {
                        continue;
                    }
                    let mut next = w.clone();
                    next.extend(piece.iter().copied());
                    if out.insert(next.clone()) {
                        frontier.push(next);
                    }
                }
                cap_check(&out, limits)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::Domain;

    fn limits() -> Limits {
        Limits::default()
    }

    fn words(r: &Regex, n: usize) -> Vec<Vec<usize>> {
        enumerate_language(r, n, &limits())
            .unwrap()
            .into_iter()
            .map(|w| w.seq)
            .collect()
    }

    #[test]
    fn constructors_flatten_and_collapse() {
        let c = Regex::concat(vec![
            Regex::concat(vec![Regex::literal(1), Regex::literal(2)]),
            Regex::literal(3),
        ]);
        match c.kind() {
            RegexKind::Concat(cs) => assert_eq!(cs.len(), 3),
            _ => panic!("expected flat concat"),
        }
        assert_eq!(c.size(), 4);

        let u = Regex::union(vec![Regex::union(vec![Regex::literal(1)]), Regex::literal(2)]);
        match u.kind() {
            RegexKind::Union(cs) => assert_eq!(cs.len(), 2),
            _ => panic!("expected flat union"),
        }

        // (a*)* collapses to a*.
        let ss = Regex::star(Regex::star(Regex::literal(1)));
        assert_eq!(ss, Regex::star(Regex::literal(1)));

        assert!(Regex::concat(vec![]).is_epsilon());
        assert!(Regex::union(vec![]).is_empty_set());
    }

    #[test]
    fn eliminate_empty_examples() {
        // (0 | 1) 2  ->  1 2
        let r = Regex::concat(vec![
            Regex::union(vec![Regex::empty(), Regex::literal(1)]),
            Regex::literal(2),
        ]);
        assert_eq!(
            eliminate_empty(&r),
            Regex::concat(vec![Regex::literal(1), Regex::literal(2)])
        );
        // 0* -> e
        assert_eq!(eliminate_empty(&Regex::star(Regex::empty())), Regex::epsilon());
        // 1 0 -> 0
        let r = Regex::concat(vec![Regex::literal(1), Regex::empty()]);
        assert_eq!(eliminate_empty(&r), Regex::empty());
    }

    #[test]
    fn eliminate_empty_is_idempotent_and_reducing() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let r = random_tree(&mut rng, 8, true);
            let once = eliminate_empty(&r);
            assert!(once.size() <= r.size());
            assert_eq!(eliminate_empty(&once), once);
            assert!(once.is_empty_set() || once.is_empty_free());
            // Language is preserved on a bounded sample.
            assert_eq!(words(&r, 4), words(&once, 4));
        }
    }

    fn random_tree(rng: &mut impl rand::Rng, budget: usize, allow_empty: bool) -> Regex {
        if budget <= 1 {
            return match rng.gen_range(0..if allow_empty { 3 } else { 2 }) {
                0 => Regex::literal(rng.gen_range(1..=3)),
                1 => Regex::epsilon(),
                _ => Regex::empty(),
            };
        }
        match rng.gen_range(0..4) {
            0 => {
                let l = random_tree(rng, budget / 2, allow_empty);
                let r = random_tree(rng, budget - 1 - l.size(), allow_empty);
                Regex::concat(vec![l, r])
            }
            1 => {
                let l = random_tree(rng, budget / 2, allow_empty);
                let r = random_tree(rng, budget - 1 - l.size(), allow_empty);
                Regex::union(vec![l, r])
            }
            2 => Regex::star(random_tree(rng, budget - 1, allow_empty)),
            _ => random_tree(rng, 1, allow_empty),
        }
    }

    #[test]
    fn dnf_examples() {
        // 1 (2 | 3)  ->  {1 2, 1 3}
        let r = Regex::concat(vec![
            Regex::literal(1),
            Regex::union(vec![Regex::literal(2), Regex::literal(3)]),
        ]);
        let clauses = to_dnf(&r, &limits()).unwrap();
        assert_eq!(clauses.len(), 2);
        assert_eq!(
            clauses[0].factors,
            vec![Factor::Literal(1), Factor::Literal(2)]
        );
        assert_eq!(
            clauses[1].factors,
            vec![Factor::Literal(1), Factor::Literal(3)]
        );

        // (1 | 2)* -> single clause [(1* 2*)*]
        let r = Regex::star(Regex::union(vec![Regex::literal(1), Regex::literal(2)]));
        let clauses = to_dnf(&r, &limits()).unwrap();
        assert_eq!(clauses.len(), 1);
        assert_eq!(clauses[0].factors.len(), 1);
        match &clauses[0].factors[0] {
            Factor::Star(body) => {
                assert_eq!(
                    *body,
                    Regex::concat(vec![
                        Regex::star(Regex::literal(1)),
                        Regex::star(Regex::literal(2)),
                    ])
                );
            }
            other => panic!("expected star factor, got {other:?}"),
        }

        // epsilon -> one empty clause
        let clauses = to_dnf(&Regex::epsilon(), &limits()).unwrap();
        assert_eq!(clauses, vec![Clause::default()]);
    }

    fn assert_union_free(r: &Regex) {
        match r.kind() {
            RegexKind::Union(_) => panic!("union inside clause"),
            RegexKind::Empty => panic!("empty set inside clause"),
            RegexKind::Concat(cs) => cs.iter().for_each(assert_union_free),
            RegexKind::Star(b) => assert_union_free(b),
            _ => {}
        }
    }

    #[test]
    fn dnf_preserves_language_and_shape_on_random_trees() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let r = eliminate_empty(&random_tree(&mut rng, 9, true));
            if r.is_empty_set() {
                continue;
            }
            let clauses = to_dnf(&r, &limits()).unwrap();
            let mut union_words = BTreeSet::new();
            for c in &clauses {
                assert!(!c.factors.iter().any(|f| matches!(f, Factor::Literal(0))));
                for f in &c.factors {
                    if let Factor::Star(b) = f {
                        assert_union_free(b);
                    }
                }
                union_words.extend(words(&c.to_regex(), 5));
            }
            let direct: BTreeSet<_> = words(&r, 5).into_iter().collect();
            assert_eq!(direct, union_words, "language changed for {r}");
        }
    }

    #[test]
    fn enumerate_language_star() {
        let r = Regex::star(Regex::concat(vec![Regex::literal(1), Regex::literal(2)]));
        let ws = words(&r, 5);
        assert_eq!(ws, vec![vec![], vec![1, 2], vec![1, 2, 1, 2]]);
    }

    #[test]
    fn negative_literal_scan() {
        let sys =
            AffineSystem::from_i64(&[(2, 1), (-2, 0)], 0, 0, Domain::Integers).unwrap();
        let r = Regex::star(Regex::literal(1));
        assert!(!has_negative_literal(&r, &sys).unwrap());
        let r = Regex::concat(vec![Regex::literal(1), Regex::star(Regex::literal(2))]);
        assert!(has_negative_literal(&r, &sys).unwrap());
    }

    #[test]
    fn budget_checks_fail_closed() {
        let tight = Limits::with_max_regex_nodes(4);
        let a = Regex::concat(vec![Regex::literal(1), Regex::literal(2)]);
        let b = Regex::concat(vec![Regex::literal(1), Regex::literal(2)]);
        assert!(matches!(
            checked_concat(a.clone(), b, &tight),
            Err(Error::ResourceExceeded(_))
        ));
        // star adds one node on top of the size-3 body
        let tighter = Limits::with_max_regex_nodes(3);
        assert!(checked_star(a, &tighter).is_err());

        // DNF of (1|2)(1|2)(1|2) needs more than 10 nodes.
        let alt = Regex::union(vec![Regex::literal(1), Regex::literal(2)]);
        let r = Regex::concat(vec![alt.clone(), alt.clone(), alt]);
        let tight = Limits::with_max_regex_nodes(10);
        assert!(matches!(to_dnf(&r, &tight), Err(Error::ResourceExceeded(_))));
    }
}
