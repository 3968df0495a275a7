use thiserror::Error;

/// Errors produced by the analysis pipeline.
///
/// The variants split along the lines the command-line front end needs for
/// its exit codes: `Usage` maps to a usage failure, everything else is a
/// data-level failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("data error: {0}")]
    InvalidData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("series are not aligned: first mismatch in {0}")]
    Alignment(Mismatch),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {best_objective:.6e})")]
    NonConvergence {
        iterations: usize,
        best_objective: f64,
        best_params: Vec<f64>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }

    /// True for errors caused by how the caller invoked an operation rather
    /// than by the content of the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }
}

/// Which grid field differs first between two series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mismatch {
    Start,
    Step,
    Count,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mismatch::Start => "start",
            Mismatch::Step => "step",
            Mismatch::Count => "count",
        };
        f.write_str(s)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
