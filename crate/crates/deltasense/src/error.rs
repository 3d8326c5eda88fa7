use thiserror::Error;

/// Errors surfaced by geometry construction, metric evaluation, solvers and IO.
#[derive(Debug, Error)]
pub enum ModelError {
    /// An argument violated a documented precondition (range, sign, emptiness).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two paired slices had different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Geometry that cannot support the requested construction
    /// (zero-measure area, fully coincident sites, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A configuration file or value could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, annotated with the offending path.
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Serialization or deserialization failure.
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl ModelError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ModelError::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
