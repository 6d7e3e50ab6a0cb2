use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed external input (CSV rows, JSON documents, config files).
    #[error("input error: {0}")]
    Input(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    /// One or more edge fits failed; each entry is `(a, b, reason)`.
    #[error("estimation failed on {} edge(s): {}", .0.len(), format_edge_failures(.0))]
    EdgeFailures(Vec<(usize, usize, String)>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_edge_failures(failures: &[(usize, usize, String)]) -> String {
    failures
        .iter()
        .map(|(a, b, why)| format!("({a},{b}): {why}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Error::EstimationFailure(msg.into())
    }

    /// True for failures of a numerical fit, as opposed to bad input.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(self, Error::EstimationFailure(_) | Error::EdgeFailures(_))
    }
}
