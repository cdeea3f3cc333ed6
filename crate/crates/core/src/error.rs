use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no valid records found under {0}")]
    EmptyCorpus(PathBuf),

    #[error("hashtag #{0} matches no tweets")]
    UnknownHashtag(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("value {value} of feature `{feature}` falls outside every bucket")]
    Uncovered { feature: String, value: f64 },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("row width {got} does not match model width {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("malformed model container: {0}")]
    Container(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable snake_case name of the variant, for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::EmptyCorpus(_) => "empty_corpus",
            Error::UnknownHashtag(_) => "unknown_hashtag",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EmptyInput(_) => "empty_input",
            Error::Uncovered { .. } => "uncovered",
            Error::SchemaMismatch(_) => "schema_mismatch",
            Error::Unsupported(_) => "unsupported",
            Error::Degenerate(_) => "degenerate",
            Error::WidthMismatch { .. } => "width_mismatch",
            Error::Container(_) => "container",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Stable numeric code of the variant; used as the process exit status
    /// and as the C status code.
    pub fn code(&self) -> i32 {
        match self {
            Error::Io { .. } => 10,
            Error::EmptyCorpus(_) => 11,
            Error::UnknownHashtag(_) => 12,
            Error::InvalidArgument(_) => 13,
            Error::EmptyInput(_) => 14,
            Error::Uncovered { .. } => 15,
            Error::SchemaMismatch(_) => 16,
            Error::Unsupported(_) => 17,
            Error::Degenerate(_) => 18,
            Error::WidthMismatch { .. } => 19,
            Error::Container(_) => 20,
            Error::Json(_) => 21,
            Error::Csv(_) => 22,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
