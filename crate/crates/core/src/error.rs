use thiserror::Error;

/// Errors raised by tallying, estimation, resampling and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty after dropping zero-count records")]
    EmptyDataset,

    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },

    #[error("small-sample correction needs at least 2 samples, got {m}")]
    InsufficientSamples { m: u64 },

    #[error("subsample size {k} exceeds the {available} available units")]
    SubsampleTooLarge { k: u64, available: u64 },

    #[error("subsample size must be positive")]
    InvalidSize,

    #[error("input vector has zero variance")]
    DegenerateVariance,

    #[error("{points} points cannot determine a degree-{degree} fit")]
    InsufficientPoints { points: usize, degree: usize },

    #[error("invalid population spec: {0}")]
    InvalidSpec(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "EmptyDataset",
            Error::Schema { .. } => "SchemaError",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::SubsampleTooLarge { .. } => "SubsampleTooLarge",
            Error::InvalidSize => "InvalidSize",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::InsufficientPoints { .. } => "InsufficientPoints",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn schema(row: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            row,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
