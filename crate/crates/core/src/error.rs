use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("image error: {0}")]
    Image(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("network layer {layer}: {detail}")]
    ShapeMismatch { layer: String, detail: String },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Divergence { epoch: usize, batch: usize },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag, used by the HTTP layer and the CLI
    /// exit-code mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Image(_) => "image",
            Error::Io(_) => "io",
            Error::Schema { .. } => "schema",
            Error::InvalidInput(_) => "invalid_input",
            Error::Data(_) => "data",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::Divergence { .. } => "divergence",
            Error::Json(_) => "json",
        }
    }
}
