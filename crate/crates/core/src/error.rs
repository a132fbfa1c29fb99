use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty matrix: {0}")]
    Empty(&'static str),

    #[error("embedding dimension mismatch: frames have {frames} dims, slides have {slides} dims")]
    DimMismatch { frames: usize, slides: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("linear penalty undefined for single frame")]
    SingleFrameLinear,

    #[error("length mismatch: alignment has {pred} frames, ground truth has {truth} segments")]
    LengthMismatch { pred: usize, truth: usize },

    #[error("undefined ratio: every segment is labeled -1")]
    UndefinedRatio,

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error("non-finite objective at iteration {0}")]
    NonFiniteObjective(usize),

    #[error("not an embedding file")]
    NotEmbeddingFile,

    #[error("unsupported format version {0}")]
    Version(u32),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("ragged row {row}: expected {expected} values, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("bad value in row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("ground truth: {0}")]
    GroundTruth(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the caller's inputs rather than by a bug.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::NonFiniteObjective(_))
    }
}
