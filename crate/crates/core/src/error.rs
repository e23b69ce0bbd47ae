use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the method library and the command-line harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate abscissae: c[{i}] and c[{j}] coincide")]
    DegenerateAbscissae { i: usize, j: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("stage order {q} is not supported for order {p} (must be p or p-1)")]
    UnsupportedStageOrder { p: usize, q: usize },

    #[error("newton-divergence at stage {stage} after {iterations} iterations")]
    NewtonDivergence { stage: usize, iterations: usize },

    #[error("singular-resolvent: I - zA is numerically singular")]
    SingularResolvent,

    #[error("no-stiff-limit: A is singular (explicit method)")]
    NoStiffLimit,

    #[error("missing derivatives: {0}")]
    MissingDerivatives(String),

    #[error("interval [{t0}, {tf}] is not an integer number of steps of size {h}")]
    StepMismatch { t0: f64, tf: f64, h: f64 },

    #[error("step-count-overflow: {steps} steps requested, cap is {cap}")]
    StepCountOverflow { steps: usize, cap: usize },

    #[error("unknown method '{name}'; available: {available}")]
    UnknownMethod { name: String, available: String },

    #[error("unknown problem '{name}'; available: {available}")]
    UnknownProblem { name: String, available: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
