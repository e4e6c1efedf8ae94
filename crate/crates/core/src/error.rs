use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("index {index} out of bounds for size {size}")]
    IndexOutOfBounds { index: usize, size: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero-norm vector: cosine similarity is undefined")]
    ZeroNorm,

    #[error("sets must be disjoint, item {0} appears in both")]
    Overlap(usize),

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("mu > 0 requires a quality vector")]
    MissingQuality,

    #[error("kernel restricted to {0} is not positive definite (W > 0 required)")]
    NotPositiveDefinite(String),

    #[error("exhaustive search over {count} subsets exceeds the guard of {limit}; use a smaller instance")]
    GuardExceeded { count: u128, limit: u128 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short tag used in machine-readable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::IndexOutOfBounds { .. } => "index",
            Error::DimensionMismatch { .. } => "dimension",
            Error::ZeroNorm => "zero-norm",
            Error::Overlap(_) => "overlap",
            Error::EmptyCandidates => "empty-candidates",
            Error::MissingQuality => "missing-quality",
            Error::NotPositiveDefinite(_) => "not-positive-definite",
            Error::GuardExceeded { .. } => "guard",
            Error::Numerical(_) => "numerical",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code; each kind maps to a distinct value.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::Format(_) => 4,
            Error::Validation(_) => 5,
            Error::IndexOutOfBounds { .. } => 6,
            Error::DimensionMismatch { .. } => 7,
            Error::ZeroNorm => 8,
            Error::Overlap(_) => 9,
            Error::EmptyCandidates => 10,
            Error::MissingQuality => 11,
            Error::NotPositiveDefinite(_) => 12,
            Error::GuardExceeded { .. } => 13,
            Error::Numerical(_) => 14,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
