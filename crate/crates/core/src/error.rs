use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("target column {0} not found")]
    MissingTarget(String),
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("column '{0}' has zero variance; drop it before standardizing")]
    ZeroVariance(String),
    #[error("K={k} out of range: must satisfy 1 <= K <= {max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("sample {index} has a zero K-th neighbor distance (duplicated points); enable jitter")]
    DuplicatePoints { index: usize },
    #[error("feature index {index} out of range for {count} features")]
    FeatureIndex { index: usize, count: usize },
    #[error("estimation failed for feature '{feature}': {source}")]
    Feature {
        feature: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps an estimator failure with the name of the feature being scored.
    pub(crate) fn for_feature(self, feature: &str) -> Self {
        match self {
            e @ Error::Feature { .. } => e,
            e => Error::Feature {
                feature: feature.to_string(),
                source: Box::new(e),
            },
        }
    }
}
