//! Reachability between integers under finite sets of affine maps.
//!
//! Given integers `x`, `y` and maps `f(z) = a*z + b`, the solver decides
//! whether some composition of the maps sends `x` to `y`, either over all
//! integers or over the naturals, where every intermediate value must stay
//! nonnegative. Positive answers come with a run-length encoded witness
//! that [`affine::check_witness`] can replay independently.
//!
//! The crate is organised around the solver's case analysis:
//!
//! - [`affine`]: maps, systems, words, witnesses, and evaluation.
//! - [`interval`]: bounded window search for expanding systems.
//! - [`automaton`] and [`regex`]: congruence languages modulo a shift
//!   offset, converted to regular expressions and disjunctive form.
//! - [`monotone`]: extremal congruent values via monotone walks, the core
//!   of the shift cases.
//! - [`solver`]: the dispatcher that peels constants, identities, shifts,
//!   and reflections down to the searchable cases.
//! - [`oracle`]: independent ground truth (bounded search, knapsack
//!   tables) and seeded instance generators for testing.

pub mod affine;
pub mod automaton;
pub mod config;
pub mod error;
pub mod interval;
pub mod monotone;
pub mod oracle;
pub mod regex;
pub mod solver;

pub use affine::{
    apply, apply_rle, apply_word, check_witness, is_valid_orbit, AffineMap, AffineSystem, Domain,
    ExtInt, RleRun, RleWord, Word,
};
pub use config::Limits;
pub use error::{Error, Result};
pub use solver::{decide, Decision, SolveStats, Verdict};
