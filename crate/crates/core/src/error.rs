use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid ring lattice: N = {n} must exceed 2k = {}", 2 * .k)]
    InvalidSpec { n: usize, k: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("too few levels: need at least {needed}, have {have}")]
    TooFewLevels { needed: usize, have: usize },

    #[error("too few points: need at least {needed}, have {have}")]
    TooFewPoints { needed: usize, have: usize },

    #[error("no connected rewiring found after {attempts} attempts (N = {n}, k = {k}, p = {p})")]
    ConnectivityExhausted {
        n: usize,
        k: usize,
        p: f64,
        attempts: usize,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Wraps the error with a label such as a pipeline stage or grid point.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user-supplied configuration or
    /// parameters, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter(_)
            | Error::InvalidSpec { .. }
            | Error::Config(_)
            | Error::DimensionMismatch { .. } => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
