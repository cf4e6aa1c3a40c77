use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid network spec: {0}")]
    Spec(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("label {label} out of range for {num_classes} classes")]
    Label { label: usize, num_classes: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("format error: {0}")]
    Format(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metrics logs do not share the same evaluated rounds")]
    MismatchedRounds,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by input data (files, parsing, partitioning)
    /// rather than by a violated runtime contract.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Label { .. }
                | Error::EmptyDataset
                | Error::Format(_)
                | Error::Partition(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
