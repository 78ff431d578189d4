use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// `ResourceExceeded` is an honest "could not decide within the configured
/// budget" outcome; it is never a wrong verdict and callers are expected to
/// surface it distinctly (the CLI maps it to its own exit code).
#[derive(Debug, Error)]
pub enum Error {
    /// A system could not be constructed (e.g. a negative endpoint in the
    /// naturals domain).
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// An operation was called outside its documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A configured limit (regex nodes, automaton states, search frontier,
    /// arithmetic magnitude) would be exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceExceeded(String),

    /// A verdict was reached but the certificate could not be materialized
    /// within the configured limits. The verdict itself still stands.
    #[error("witness reconstruction exceeded resource limits")]
    WitnessUnavailable,
}

pub type Result<T> = std::result::Result<T, Error>;
