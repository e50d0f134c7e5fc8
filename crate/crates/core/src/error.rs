use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Degenerate,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("high band too small: {bins} bin(s), need at least {needed}")]
    BandTooSmall { bins: usize, needed: usize },

    #[error("degenerate band: every high-band value is zero")]
    DegenerateBand,

    #[error("invalid experiment code {code:?}: {field}: {reason}")]
    Parse {
        code: String,
        field: &'static str,
        reason: String,
    },

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Divergence { epoch: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown setup {0:?}")]
    UnknownSetup(String),

    #[error("schema mismatch in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("unsupported image format: {}", .0.display())]
    UnsupportedFormat(PathBuf),

    #[error("cannot decode {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an I/O failure on `path`; a missing file becomes [`Error::NotFound`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Dimension(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::UnknownSetup(_)
            | Error::Schema { .. }
            | Error::Json(_) => ErrorKind::Validation,
            Error::NotFound(_)
            | Error::UnsupportedFormat(_)
            | Error::Decode { .. }
            | Error::Io { .. } => ErrorKind::Io,
            Error::DegenerateSpectrum(_)
            | Error::BandTooSmall { .. }
            | Error::DegenerateBand
            | Error::Divergence { .. }
            | Error::InsufficientData(_) => ErrorKind::Degenerate,
        }
    }
}
