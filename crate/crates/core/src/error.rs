use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("peak detection failed: requested {requested} peaks, found {found}")]
    Detection { requested: usize, found: usize },

    #[error("pair classification rejected: implied ZFS values {zfs1_ghz:.4} GHz and {zfs2_ghz:.4} GHz")]
    Classification { zfs1_ghz: f64, zfs2_ghz: f64 },

    /// A heralding outcome with zero probability was requested.
    #[error("protocol failure: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Detection { .. } => "detection",
            Error::Classification { .. } => "classification",
            Error::Protocol(_) => "protocol",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
