//! Affine maps over the integers, problem instances, and run-length-encoded
//! composition words.
//!
//! A map is `f(z) = a*z + b` with arbitrary-precision integer coefficients.
//! Words are sequences of 1-based map indices applied left to right, so the
//! first letter acts first. Run-length encoding keeps certificates small even
//! when a single map must be applied an astronomically large number of times:
//! a run of `f` with count `n` is evaluated in closed form,
//! `f^n(z) = a^n*z + b*(a^n - 1)/(a - 1)` for `a != 1` and `z + n*b` for
//! `a = 1`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Hard cap on the bit length of values produced by closed-form run
/// evaluation. Guards against runs like `(2z)^n` with `n` too large to ever
/// materialize; such requests fail with `ResourceExceeded` instead of
/// exhausting memory.
const MAX_POW_BITS: u64 = 1 << 27;

/// An affine map `f(z) = a*z + b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineMap {
    pub a: BigInt,
    pub b: BigInt,
}

impl AffineMap {
    pub fn new(a: BigInt, b: BigInt) -> Self {
        AffineMap { a, b }
    }

    pub fn from_i64(a: i64, b: i64) -> Self {
        AffineMap::new(BigInt::from(a), BigInt::from(b))
    }

    pub fn identity() -> Self {
        AffineMap::new(BigInt::one(), BigInt::zero())
    }

    pub fn apply(&self, z: &BigInt) -> BigInt {
        &self.a * z + &self.b
    }

    /// The composition "self first, then `next`".
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        AffineMap {
            a: &next.a * &self.a,
            b: &next.a * &self.b + &next.b,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.a.is_zero()
    }

    /// `f(z) = z + b` with `b != 0`.
    pub fn is_shift(&self) -> bool {
        self.a.is_one() && !self.b.is_zero()
    }

    /// `f(z) = -z + b`.
    pub fn is_involution(&self) -> bool {
        self.a == BigInt::from(-1)
    }

    /// `|a| > 1`.
    pub fn is_expanding(&self) -> bool {
        self.a.abs() > BigInt::one()
    }

    /// `f^n(z)` in closed form.
    pub fn pow_apply(&self, n: &BigUint, z: &BigInt) -> Result<BigInt> {
        if n.is_zero() {
            return Ok(z.clone());
        }
        if self.a.is_one() {
            return Ok(z + &self.b * BigInt::from(n.clone()));
        }
        if self.a.is_zero() {
            return Ok(self.b.clone());
        }
        let e = n.to_u64().ok_or_else(|| {
            Error::ResourceExceeded(format!("run count {n} too large for |a| > 1 evaluation"))
        })?;
        let est = e.saturating_mul(self.a.bits()).saturating_add(z.magnitude().bits());
        if est > MAX_POW_BITS {
            return Err(Error::ResourceExceeded(format!(
                "closed-form value of a run would exceed {MAX_POW_BITS} bits"
            )));
        }
        let an: BigInt = Pow::pow(&self.a, e);
        let geometric = (&self.b * (&an - BigInt::one())) / (&self.a - BigInt::one());
        Ok(an * z + geometric)
    }

    /// The n-fold composition `f^n` as a map, under the same size guard as
    /// [`AffineMap::pow_apply`].
    pub fn pow_map(&self, n: &BigUint) -> Result<AffineMap> {
        if n.is_zero() {
            return Ok(AffineMap::identity());
        }
        if self.a.is_one() {
            return Ok(AffineMap::new(BigInt::one(), &self.b * BigInt::from(n.clone())));
        }
        if self.a.is_zero() {
            return Ok(self.clone());
        }
        let e = n.to_u64().ok_or_else(|| {
            Error::ResourceExceeded(format!("run count {n} too large for |a| > 1 composition"))
        })?;
        let est = e.saturating_mul(self.a.bits());
        if est > MAX_POW_BITS {
            return Err(Error::ResourceExceeded(format!(
                "closed-form composition would exceed {MAX_POW_BITS} bits"
            )));
        }
        let an: BigInt = Pow::pow(&self.a, e);
        let geometric = (&self.b * (&an - BigInt::one())) / (&self.a - BigInt::one());
        Ok(AffineMap::new(an, geometric))
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.a.is_zero() {
            return write!(f, "{}", self.b);
        }
        match self.a.to_i64() {
            Some(1) => write!(f, "z")?,
            Some(-1) => write!(f, "-z")?,
            _ => write!(f, "{}z", self.a)?,
        }
        if self.b.is_positive() {
            write!(f, "+{}", self.b)
        } else if self.b.is_negative() {
            write!(f, "{}", self.b)
        } else {
            Ok(())
        }
    }
}

/// Which values a composition is allowed to pass through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    /// Any integer intermediate is fine.
    Integers,
    /// Every intermediate value, including the endpoints, must be >= 0.
    Naturals,
}

/// A reachability instance: a finite set of maps plus endpoints.
///
/// Maps are deduplicated on construction, preserving first occurrence order;
/// words refer to maps by 1-based index into the deduplicated list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSystem {
    maps: Vec<AffineMap>,
    pub x: BigInt,
    pub y: BigInt,
    pub domain: Domain,
}

impl AffineSystem {
    pub fn new(maps: Vec<AffineMap>, x: BigInt, y: BigInt, domain: Domain) -> Result<Self> {
        if domain == Domain::Naturals && (x.is_negative() || y.is_negative()) {
            return Err(Error::InvalidSystem(format!(
                "naturals domain requires x >= 0 and y >= 0, got x={x}, y={y}"
            )));
        }
        let mut dedup: Vec<AffineMap> = Vec::with_capacity(maps.len());
        for m in maps {
            if !dedup.contains(&m) {
                dedup.push(m);
            }
        }
        Ok(AffineSystem {
            maps: dedup,
            x,
            y,
            domain,
        })
    }

    pub fn from_i64(maps: &[(i64, i64)], x: i64, y: i64, domain: Domain) -> Result<Self> {
        AffineSystem::new(
            maps.iter().map(|&(a, b)| AffineMap::from_i64(a, b)).collect(),
            BigInt::from(x),
            BigInt::from(y),
            domain,
        )
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The map at 1-based `index`.
    pub fn map(&self, index: usize) -> Result<&AffineMap> {
        if index == 0 || index > self.maps.len() {
            return Err(Error::Precondition(format!(
                "map index {index} out of range 1..={}",
                self.maps.len()
            )));
        }
        Ok(&self.maps[index - 1])
    }

    /// The system with the map at 1-based `index` removed, plus the mapping
    /// from new 1-based indices to old ones.
    pub fn without(&self, index: usize) -> (AffineSystem, Vec<usize>) {
        let mut maps = Vec::with_capacity(self.maps.len().saturating_sub(1));
        let mut remap = Vec::with_capacity(self.maps.len().saturating_sub(1));
        for (i, m) in self.maps.iter().enumerate() {
            if i + 1 != index {
                maps.push(m.clone());
                remap.push(i + 1);
            }
        }
        (
            AffineSystem {
                maps,
                x: self.x.clone(),
                y: self.y.clone(),
                domain: self.domain,
            },
            remap,
        )
    }

    /// The same map set with different endpoints.
    pub fn with_endpoints(&self, x: BigInt, y: BigInt) -> Result<AffineSystem> {
        AffineSystem::new(self.maps.clone(), x, y, self.domain)
    }

    /// One-line description used in decision traces.
    pub fn summary(&self) -> String {
        let maps: Vec<String> = self.maps.iter().map(|m| format!("({},{})", m.a, m.b)).collect();
        let d = match self.domain {
            Domain::Integers => "Z",
            Domain::Naturals => "N",
        };
        format!("maps=[{}] x={} y={} over {d}", maps.join(","), self.x, self.y)
    }
}

/// A flat composition word: 1-based map indices applied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub seq: Vec<usize>,
}

impl Word {
    pub fn new(seq: Vec<usize>) -> Self {
        Word { seq }
    }

    pub fn empty() -> Self {
        Word { seq: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

/// One run of a run-length-encoded word: `count` consecutive applications of
/// the map at 1-based `index`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RleRun {
    pub index: usize,
    pub count: BigUint,
}

impl RleRun {
    pub fn new(index: usize, count: impl Into<BigUint>) -> Self {
        RleRun {
            index,
            count: count.into(),
        }
    }
}

/// A run-length-encoded composition word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RleWord {
    pub runs: Vec<RleRun>,
}

impl RleWord {
    pub fn new(runs: Vec<RleRun>) -> Self {
        RleWord { runs }
    }

    pub fn empty() -> Self {
        RleWord { runs: Vec::new() }
    }

    /// Each letter becomes its own count-1 run; no merging.
    pub fn from_word(w: &Word) -> Self {
        RleWord {
            runs: w.seq.iter().map(|&i| RleRun::new(i, 1u32)).collect(),
        }
    }

    /// Append a run, merging with the tail when the index matches.
    pub fn push_run(&mut self, run: RleRun) {
        if run.count.is_zero() {
            return;
        }
        if let Some(last) = self.runs.last_mut() {
            if last.index == run.index {
                last.count += run.count;
                return;
            }
        }
        self.runs.push(run);
    }

    /// Plain concatenation of several encoded words.
    pub fn concat(parts: impl IntoIterator<Item = RleWord>) -> Self {
        let mut runs = Vec::new();
        for p in parts {
            runs.extend(p.runs);
        }
        RleWord { runs }
    }

    /// Total letter count (sum of run counts).
    pub fn letter_count(&self) -> BigUint {
        self.runs.iter().map(|r| &r.count).sum()
    }
}

/// Extended integers with two infinities; `NegInf < Finite(_) < PosInf` and
/// finite values compare as integers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtInt {
    NegInf,
    Finite(BigInt),
    PosInf,
}

impl ExtInt {
    pub fn finite(&self) -> Option<&BigInt> {
        match self {
            ExtInt::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtInt::Finite(_))
    }
}

impl From<BigInt> for ExtInt {
    fn from(v: BigInt) -> Self {
        ExtInt::Finite(v)
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::NegInf => write!(f, "-inf"),
            ExtInt::Finite(v) => write!(f, "{v}"),
            ExtInt::PosInf => write!(f, "+inf"),
        }
    }
}

/// `f(z)`.
pub fn apply(f: &AffineMap, z: &BigInt) -> BigInt {
    f.apply(z)
}

/// Applies a flat word left to right and returns the final value together
/// with the full orbit `[z, f_{w_1}(z), ...]`.
pub fn apply_word(sys: &AffineSystem, w: &Word, z: &BigInt) -> Result<(BigInt, Vec<BigInt>)> {
    let mut orbit = Vec::with_capacity(w.len() + 1);
    orbit.push(z.clone());
    let mut cur = z.clone();
    for &i in &w.seq {
        cur = sys.map(i)?.apply(&cur);
        orbit.push(cur.clone());
    }
    Ok((cur, orbit))
}

/// Applies an encoded word, evaluating each run in closed form. The
/// expansion is never materialized, so shift runs may carry astronomically
/// large counts.
pub fn apply_rle(sys: &AffineSystem, w: &RleWord, z: &BigInt) -> Result<BigInt> {
    let mut cur = z.clone();
    for run in &w.runs {
        cur = sys.map(run.index)?.pow_apply(&run.count, &cur)?;
    }
    Ok(cur)
}

/// True when the whole orbit of `w` starting at `z` (including `z` itself)
/// stays nonnegative.
pub fn is_valid_orbit(sys: &AffineSystem, w: &Word, z: &BigInt) -> Result<bool> {
    if z.is_negative() {
        return Ok(false);
    }
    let mut cur = z.clone();
    for &i in &w.seq {
        cur = sys.map(i)?.apply(&cur);
        if cur.is_negative() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Minimum of the values `f(z0), f^2(z0), ..., f^n(z0)` is nonnegative?
///
/// Exploits monotonicity: for `a >= 0` the run is monotone so endpoints
/// suffice; for `a < 0` the even- and odd-position subsequences are each
/// monotone, so four endpoints suffice. O(1) big-integer work per run.
fn run_stays_nonnegative(f: &AffineMap, z0: &BigInt, n: &BigUint) -> Result<bool> {
    if n.is_zero() {
        return Ok(true);
    }
    let one = BigUint::one();
    let z1 = f.apply(z0);
    if f.a.is_zero() {
        return Ok(!f.b.is_negative());
    }
    if f.a.is_positive() {
        let zn = f.pow_apply(n, z0)?;
        return Ok(!z1.is_negative() && !zn.is_negative());
    }
    // a < 0: odd positions 1, 3, ... and even positions 2, 4, ...
    let odd_last = if n.is_odd() { n.clone() } else { n - &one };
    let zo = f.pow_apply(&odd_last, z0)?;
    if z1.is_negative() || zo.is_negative() {
        return Ok(false);
    }
    if *n >= BigUint::from(2u32) {
        let z2 = f.apply(&z1);
        let even_last = if n.is_even() { n.clone() } else { n - &one };
        let ze = f.pow_apply(&even_last, z0)?;
        if z2.is_negative() || ze.is_negative() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verifies a certificate: the encoded word must send `sys.x` to `sys.y`,
/// and in the naturals domain every intermediate value (checked per run in
/// O(1) via monotonicity) must stay nonnegative.
pub fn check_witness(sys: &AffineSystem, w: &RleWord) -> Result<bool> {
    let mut cur = sys.x.clone();
    if sys.domain == Domain::Naturals && cur.is_negative() {
        return Ok(false);
    }
    for run in &w.runs {
        let f = sys.map(run.index)?;
        if sys.domain == Domain::Naturals && !run_stays_nonnegative(f, &cur, &run.count)? {
            return Ok(false);
        }
        cur = f.pow_apply(&run.count, &cur)?;
    }
    Ok(cur == sys.y)
}

/// Deletes every occurrence of the shift `sys.maps[shift_index]` from `w`
/// and returns the residual word `h` together with the coefficient `a` such
/// that applying `w` equals applying `h` and then adding `a * k`, where `k`
/// is the shift offset.
///
/// `a` is the sum, over deleted occurrences, of the product of the linear
/// coefficients of the non-shift maps applied after that occurrence.
pub fn shift_normalize(sys: &AffineSystem, shift_index: usize, w: &Word) -> Result<(Word, BigInt)> {
    let shift = sys.map(shift_index)?;
    if !shift.a.is_one() {
        return Err(Error::Precondition(format!(
            "map {shift_index} has linear coefficient {}, expected 1",
            shift.a
        )));
    }
    let mut acc = BigInt::zero();
    let mut prod = BigInt::one();
    let mut rest = Vec::new();
    for &i in w.seq.iter().rev() {
        if i == shift_index {
            acc += &prod;
        } else {
            let f = sys.map(i)?;
            if f.a.is_zero() {
                return Err(Error::Precondition(format!(
                    "map {i} has linear coefficient 0; shift extraction undefined"
                )));
            }
            prod *= &f.a;
            rest.push(i);
        }
    }
    rest.reverse();
    Ok((Word::new(rest), acc))
}
