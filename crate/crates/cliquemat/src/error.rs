use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed graph or matrix input, with the 1-based source line.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Two objects that must agree on vertex or column counts do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter is outside its valid range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The expanded clique matrix would exceed the column cap.
    #[error("clique-matrix expansion exceeds the {cap}-column cap; raise the cap or supply a smaller matrix")]
    ExpansionTooLarge { cap: usize },

    /// The graph has no perfect elimination ordering.
    #[error("graph is not decomposable")]
    NotDecomposable,

    /// A matrix required to be positive (semi)definite is not.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// The clique-matrix mask does not reconstruct the constraint graph.
    #[error("mask is not a valid clique matrix for the graph")]
    InvalidMask,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
