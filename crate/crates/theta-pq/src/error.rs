//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid signature: require 2 <= p < q, got ({p},{q})")]
    Signature { p: usize, q: usize },

    #[error("matrix is not a Q-isometry")]
    NotIsometry,

    #[error("subspace is not isotropic")]
    NotIsotropic,

    #[error("flags are not transverse")]
    NotTransverse,

    #[error("sign-convention search failed: {0}")]
    ConventionSearch(String),

    #[error("intersection has dimension {got}, expected {expected}")]
    IntersectionDim { expected: usize, got: usize },

    #[error("index {k} out of range {min}..={max}")]
    IndexRange { k: usize, min: usize, max: usize },

    #[error("matrix is not unipotent in the expected cell")]
    NotUnipotent,

    #[error("eigenvalue iteration failed to converge within budget")]
    EigenNoConvergence,

    #[error("eigenvalue gap at k={k} is not certified > 1")]
    InsufficientGap { k: usize },

    #[error("top eigenspace is not real")]
    NonRealEigenspace,

    #[error("element is not hyperbolic")]
    NotHyperbolic,

    #[error("transversality lost along finite-difference path after {retries} retries")]
    FdRetriesExhausted { retries: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("undecided: {0}")]
    Undecided(String),
}
