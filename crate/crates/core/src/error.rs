use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed rep spec at byte {offset}: {message}")]
    MalformedSpec { offset: usize, message: String },

    #[error("unsupported degree {degree} (cap {cap})")]
    UnsupportedDegree { degree: usize, cap: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("decomposition of order {order} failed: residual {residual:e}")]
    DecompositionFailed { order: usize, residual: f64 },

    #[error("degenerate local frame at node {node}")]
    DegenerateFrame { node: usize },

    #[error("negative distance {0}")]
    NegativeDistance(f64),

    #[error("direction is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch} (grad norm {grad_norm:e})")]
    NanLoss {
        epoch: usize,
        batch: usize,
        grad_norm: f64,
    },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
