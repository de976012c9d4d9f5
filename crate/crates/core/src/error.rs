use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arity: k = {k}, need k >= {min}")]
    InvalidArity { k: usize, min: usize },

    #[error("parameter out of range: {what}; admissible: {admissible}")]
    OutOfRange { what: String, admissible: String },

    #[error("boundary-infeasible: k = {k}, p = {p} lies on the interval boundary, so no pairwise independent distribution has full even-weight support")]
    BoundaryInfeasible { k: usize, p: String },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} too large: {value} exceeds limit {limit}")]
    TooLarge { what: String, value: u128, limit: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("pairwise independence: {0}")]
    PairwiseIndependent(String),

    #[error("degree {degree} exceeds cap {cap}")]
    Degree { degree: usize, cap: usize },

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("character precondition failed: support weight {weight} times r = {r} is not 0 mod {modulus}")]
    CharacterPrecondition { weight: usize, r: usize, modulus: usize },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NotFound(_)
                | Error::Convergence(_)
                | Error::Verification(_)
                | Error::Internal(_)
                | Error::Matrix(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArity { .. } => "invalid-arity",
            Error::OutOfRange { .. } => "out-of-range",
            Error::BoundaryInfeasible { .. } => "boundary-infeasible",
            Error::UnsupportedShape(_) => "unsupported-shape",
            Error::InvalidMixture(_) => "invalid-mixture",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::Parse(_) => "parse",
            Error::TooLarge { .. } => "size",
            Error::Precondition(_) => "precondition",
            Error::PairwiseIndependent(_) => "pairwise-independent",
            Error::Degree { .. } => "degree",
            Error::Matrix(_) => "matrix",
            Error::Mode(_) => "mode",
            Error::Index(_) => "index",
            Error::CharacterPrecondition { .. } => "character-precondition",
            Error::NotFound(_) => "not-found",
            Error::Convergence(_) => "convergence",
            Error::Verification(_) => "verification",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
