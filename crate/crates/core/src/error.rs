use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "state has tail mass {mass:.3e} outside the grid span [{span_lo}, {span_hi}); \
         it requires a span covering at least [{required_lo:.6}, {required_hi:.6}]"
    )]
    TailMass {
        mass: f64,
        span_lo: f64,
        span_hi: f64,
        required_lo: f64,
        required_hi: f64,
    },

    #[error("cannot normalize a field with zero norm")]
    ZeroNorm,

    #[error("displacement {delta} is not an integer multiple of the grid spacing {dx}")]
    NonCommensurate { delta: f64, dx: f64 },

    #[error("operation `{operation}` does not support state kind `{kind}`")]
    UnsupportedState {
        operation: &'static str,
        kind: &'static str,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "eigensolver did not converge for eigenpair {index} after {iterations} iterations \
         (residual {residual:.3e})"
    )]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("nothing to plot: {0}")]
    EmptyPlot(String),

    #[error("unknown plot kind `{0}` (expected `heatmap` or `line`)")]
    UnknownPlotKind(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Configuration failures, kept distinct so callers can tell a missing file
/// from a malformed one from a semantically invalid one.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {0}")]
    Missing(PathBuf),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
