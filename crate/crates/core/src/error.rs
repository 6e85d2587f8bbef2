use thiserror::Error;

/// Errors raised by the algebra and verification routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} is outside the supported range 3..=101")]
    UnsupportedModulus(u64),

    #[error("division by zero")]
    DivisionByZero,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("structural mismatch: {0}")]
    Structural(String),

    /// A point lies on a pole or degeneracy hyperplane `z_i - z_j - m = 0`.
    #[error("point is singular: lies on z{i} - z{j} - ({m}) = 0")]
    Singular { i: usize, j: usize, m: String },

    #[error("point sampling gave up after {0} attempts")]
    Sampling(usize),

    #[error("not exactly divisible: {0}")]
    NotDivisible(String),

    #[error("{0} of the zero polynomial is undefined")]
    ZeroPolynomial(&'static str),

    #[error("degenerate linear system: rank {rank}, expected {expected}")]
    Rank { rank: usize, expected: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
