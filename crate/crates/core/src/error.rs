use std::path::PathBuf;

/// Errors raised across the codec, metrics, and pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Corruption { stored: u32, computed: u32 },

    #[error("truncated input: needed {needed} bytes, found {found}")]
    Truncation { needed: usize, found: usize },

    #[error("unsupported version {0}")]
    Version(u8),

    #[error("non-finite value at step {step}: {what}")]
    Numerical { step: usize, what: String },

    #[error("backend error: {0}")]
    Backend(String),

    #[error("backend timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("need at least {needed} samples, got {found}")]
    SampleSize { needed: usize, found: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sketch stream could not be decoded: {0}")]
    Decode(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
