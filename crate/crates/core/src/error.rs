use crate::qp::QpStatus;

/// Errors raised by the data-driven control core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("(C, A) is unobservable: observability matrix rank {rank} < {order}")]
    Unobservable { rank: usize, order: usize },

    #[error(
        "dataset too small: {available} trajectories of length {depth}, \
         but at least n + m*L = {required} are needed for the rank condition"
    )]
    InsufficientData {
        available: usize,
        required: usize,
        depth: usize,
    },

    #[error("recent window holds {recorded} of {depth} measured samples (warm-up)")]
    WarmUp { recorded: usize, depth: usize },

    #[error("QP solver returned {status:?} after {iterations} iterations")]
    Solver { status: QpStatus, iterations: usize },

    #[error("plant state diverged: {0}")]
    Diverged(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
