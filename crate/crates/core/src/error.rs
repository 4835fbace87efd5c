use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown wavelet family `{0}`")]
    UnknownFamily(String),

    #[error("cascade depth {0} outside [{min}, {max}]", min = crate::wavelet::MIN_CASCADE_DEPTH, max = crate::wavelet::MAX_CASCADE_DEPTH)]
    CascadeDepth(u32),

    #[error("point {0} outside [0, 1]")]
    OutOfDomain(f64),

    #[error("level {level} outside the supported range [{min}, {max}]")]
    Level { level: u32, min: u32, max: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("mismatched transcripts: {0}")]
    Mismatch(String),

    #[error("serialization: {0}")]
    Serde(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
