use thiserror::Error;

/// Errors surfaced by graph construction, simulation, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("range calibration failed: {0}")]
    Calibration(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("not enough samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the CLI: 2 for configuration errors,
    /// 3 for divergence or calibration failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnsupportedTopology(_) | Error::TooFewSamples { .. } => 2,
            Error::Calibration(_) | Error::Divergence(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
