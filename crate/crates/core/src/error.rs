use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AdequacyError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("negative curtailment {value} at hour {hour}")]
    NegativeCurtailment { hour: usize, value: f64 },

    #[error("system too reliable for day mining: {accepted} shortfall days in {probed} probed")]
    TooReliable { accepted: usize, probed: usize },

    #[error("empty trace library: {0}")]
    EmptyLibrary(&'static str),

    #[error("ENS regressor untrainable: {0}")]
    Untrainable(String),

    #[error("peak-shaving problem did not converge (KKT residual {0:e})")]
    QpNotConverged(f64),

    #[error("unknown level '{0}' (expected Exact, Gre, Avg, HGB+Gre or HGB+SVR)")]
    UnknownLevel(String),

    #[error("invalid architecture '{spec}': {reason}")]
    Architecture { spec: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl AdequacyError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Format { path: path.into(), message: message.to_string() }
    }
}

pub type Result<T, E = AdequacyError> = std::result::Result<T, E>;
