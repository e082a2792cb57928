use thiserror::Error;

/// Errors surfaced by fallible operations.
///
/// Contract violations on purely in-process arguments (mismatched vector
/// lengths, out-of-range class indices) panic instead; everything that can
/// be triggered by external data comes through here.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on externally supplied data was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A subset family does not carry the values an operation needs.
    #[error("inconsistent subset family: {0}")]
    InconsistentFamily(String),

    /// Input collapsed to something with no usable mass.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Interval bounds admit no probability vector.
    #[error("infeasible intervals: {0}")]
    Infeasible(String),

    /// The requested computation exceeds a hard size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A manifest or data file could not be loaded.
    #[error("load error: {0}")]
    Load(String),

    /// A specific record in a predictions file is malformed.
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
