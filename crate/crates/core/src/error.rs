use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("missing channel `{0}`")]
    MissingChannel(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("unsupported version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("undefined signal: clean reference has zero power")]
    UndefinedSignal,

    #[error("degenerate channel `{0}`: zero variance")]
    DegenerateChannel(String),

    #[error("degenerate matrix: off-diagonal entries have zero variance")]
    DegenerateMatrix,

    #[error("non-finite loss at epoch {epoch}, batch {batch}, channel {channel}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        channel: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
