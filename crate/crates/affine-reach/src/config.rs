/// Resource limits for the decision pipeline.
///
/// Every potentially super-polynomial step (regex construction, automaton
/// size, search frontiers, witness materialization) checks against these
/// caps and reports [`crate::Error::ResourceExceeded`] instead of running
/// away. Defaults are generous for desk-scale instances.
#[derive(Clone, Debug)]
pub struct Limits {
    /// Maximum node count of any single regular expression built by the
    /// pipeline. Combination steps check sizes before allocating, so peak
    /// memory stays within the cap itself.
    pub max_regex_nodes: usize,
    /// Maximum number of residue states in a congruence automaton.
    pub max_automaton_states: usize,
    /// Maximum cardinality of an enumerated language sample.
    pub max_language_words: usize,
    /// Maximum visited vertices in an interval reachability search.
    pub max_search_nodes: usize,
    /// Maximum vertex count of the applicability graph used for
    /// negative-coefficient maps over the naturals.
    pub max_applicability_vertices: usize,
    /// Maximum number of runs materialized into a single witness.
    pub max_witness_runs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_regex_nodes: 1_000_000,
            max_automaton_states: 4096,
            max_language_words: 1_000_000,
            max_search_nodes: 1_000_000,
            max_applicability_vertices: 4096,
            max_witness_runs: 100_000,
        }
    }
}

impl Limits {
    /// Default limits with a caller-chosen regex node cap.
    pub fn with_max_regex_nodes(max_regex_nodes: usize) -> Self {
        Limits {
            max_regex_nodes,
            ..Limits::default()
        }
    }
}
