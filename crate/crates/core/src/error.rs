use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coupling b_{index} is zero; the matrix decomposes into independent blocks")]
    ZeroCoupling { index: usize },

    #[error("declared uniform block is not uniform at {what}_{index} ({found} != {expected})")]
    BlockMismatch {
        what: &'static str,
        index: usize,
        found: f64,
        expected: f64,
    },

    #[error("bad uniform block indices u={u}, v={v} for dimension {ell}")]
    BadIndices { u: usize, v: usize, ell: usize },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("non-finite matrix entry at {what}_{index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("polynomial degree {degree} exceeds bound {bound} for {which}")]
    DegreeOverflow {
        which: &'static str,
        degree: usize,
        bound: usize,
    },

    #[error("u and t sin k vanish simultaneously at k={k}")]
    ZeroAmplitude { k: f64 },

    #[error("non-positive density of states at k={k}: l+1-2phi' = {value}")]
    NegativeDos { k: f64, value: f64 },

    #[error("negative squared eigenvector component {value} at k={k}")]
    NegativeSquare { k: f64, value: f64 },

    #[error("found {found} roots {side}, Sturm count says {expected}")]
    CountMismatch {
        side: &'static str,
        found: usize,
        expected: usize,
    },

    #[error("inverse iteration did not converge for eigenvalue {lambda}")]
    ConvergenceFailure { lambda: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
