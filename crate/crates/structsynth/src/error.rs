//! Error type shared across the crate.

/// Errors produced while loading terrain documents or configuring the solver.
///
/// Algorithmic code returns `Option`/flags for expected negative outcomes
/// (no ramp fits, instance infeasible); `Error` is reserved for malformed
/// input and unusable parameter combinations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A document is structurally unusable (empty grid, ragged rows,
    /// truncated image payload, ...).
    #[error("format error: {0}")]
    Format(String),

    /// A document contains a token that does not parse as a number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A parameter violates its own documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Parameters are individually valid but outside what an algorithm
    /// supports (e.g. the ramp synthesizer's step-bound recurrences).
    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    /// A structure cell covers no grid nodes, so its ground height is
    /// undefined.
    #[error("undefined ground: structure cell covers no grid nodes")]
    UndefinedGround,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
