use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in layer {layer} ({context})")]
    Numeric { layer: usize, context: &'static str },

    #[error("unsupported activation `{0}`")]
    UnsupportedActivation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration produced a non-finite state at t = {time}")]
    Integration { time: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing prerequisite artifact: {}", .0.display())]
    Dependency(PathBuf),

    #[error("training aborted at iteration {iteration}: {reason}")]
    Training { iteration: u64, reason: String },

    #[error("all {} sweep trials failed: {}", .0.len(), .0.join("; "))]
    Sweep(Vec<String>),

    #[error("ensemble member {member} failed: {source}")]
    Ensemble {
        member: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures caused by floating-point breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. } | Error::Integration { .. } | Error::Training { .. } => true,
            Error::Ensemble { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
