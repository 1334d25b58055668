use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the segmentation pipeline and its stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violates a stated invariant. `field` names the offending value.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    /// The histogram has fewer than two occupied gray levels.
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),

    /// The EM fit or the derived threshold did not produce a usable model.
    #[error("histogram model fit failed: {0}")]
    FitFailure(String),

    #[error("size mismatch: {0:?} vs {1:?}")]
    SizeMismatch([usize; 3], [usize; 3]),

    #[error("graph has {0} node(s); at least 2 are required")]
    GraphTooSmall(usize),

    #[error("scene placement failed: {0}")]
    Placement(String),

    #[error("malformed volume file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's configuration rather than the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Invalid { .. })
    }
}
