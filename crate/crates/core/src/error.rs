use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed benchmark file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("invalid benchmark: {0}")]
    InvalidTable(String),

    #[error("objective column absent")]
    ObjectiveAbsent,

    #[error("duplicate arch_id {0:?}")]
    DuplicateArch(String),

    #[error("non-numeric objective {value:?} for arch {arch:?}")]
    NonNumericObjective { arch: String, value: String },

    #[error("zero available metrics")]
    NoMetrics,

    #[error("unknown metric {0:?}")]
    UnknownMetric(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("empty score vector")]
    EmptyScores,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("correlation undefined for a constant vector")]
    UndefinedCorrelation,

    #[error("degenerate pairwise combination: {0}")]
    DegenerateCombination(&'static str),

    #[error("gram matrix not positive definite even at jitter {0:e}")]
    Factorization(f64),

    #[error("no observations to fit")]
    NoObservations,

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0} out of range: {1}")]
    OutOfRange(&'static str, String),

    #[error("expected best rank undefined at zero precision")]
    UndefinedExpectation,

    #[error("benchmark has no genomes")]
    MissingGenomes,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
