use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("cannot impute measurement `{0}`: no population statistics")]
    NoStatistics(String),

    #[error("unknown {field} category `{value}`")]
    UnknownCategory { field: &'static str, value: String },

    #[error("numerical rank {rank} is below requested k = {requested}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("exact Shapley enumeration supports at most {max} features (got {k}); use the permutation estimator")]
    TooManyFeatures { k: usize, max: usize },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
