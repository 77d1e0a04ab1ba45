use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every fatal condition the pipeline can hit.
///
/// `Display` is a single line; [`Error::code`] gives a stable kebab-case tag
/// suitable for scripts that grep the CLI's stderr.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid community id {0:?}: expected 5 decimal digits")]
    InvalidCommunityId(String),

    #[error("no trainable communities: sentences and targets share no community")]
    NoTrainableCommunities,

    #[error("input mostly invalid: dropped {dropped} of {total} rows")]
    InputMostlyInvalid { dropped: usize, total: usize },

    #[error("coords mode requires a county centroid table")]
    MissingCentroids,

    #[error("mixed target names: {0:?} and {1:?}")]
    MixedTargetName(String, String),

    #[error("out-of-vocabulary rate {rate:.3} exceeds {limit:.2}; wrong lexicon?")]
    OovRateTooHigh { rate: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("constant target: zero variance in training values")]
    ConstantTarget,

    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    #[error("too few values: need at least {needed}, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("empty result: {0}")]
    Empty(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.to_string(),
        }
    }

    /// Stable machine-readable reason tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Config(_) => "config",
            Error::InvalidCommunityId(_) => "invalid-community-id",
            Error::NoTrainableCommunities => "no-trainable-communities",
            Error::InputMostlyInvalid { .. } => "input-mostly-invalid",
            Error::MissingCentroids => "missing-centroids",
            Error::MixedTargetName(..) => "mixed-target-name",
            Error::OovRateTooHigh { .. } => "oov-rate-too-high",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::ConstantTarget => "constant-target",
            Error::DegenerateSeries => "degenerate-series",
            Error::TooFewValues { .. } => "too-few-values",
            Error::Empty(_) => "empty",
        }
    }
}
