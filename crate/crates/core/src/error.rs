use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("invalid space description: {0}")]
    Space(String),

    #[error("deformation matrix: {0}")]
    Deformation(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("level cutoff: {0}")]
    Cutoff(String),

    #[error("positivity check failed at level {level}: {detail}")]
    NotPositive { level: usize, detail: String },

    #[error("leg {index} is not supported in a single block")]
    MixedBlockLeg { index: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("moment paths disagree (pairing {pairing}, matrix {matrix}); replay spec: {spec}")]
    Disagreement {
        pairing: String,
        matrix: String,
        spec: String,
    },
}
