use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("truncation too aggressive: P(|x| <= {radius}) = {mass:.3e} < 1/2")]
    TruncationTooAggressive { radius: f64, mass: f64 },

    #[error("moment matching infeasible: {reason} (best residual {residual:.3e})")]
    MatchInfeasible { reason: String, residual: f64 },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("linear algebra solver failed: {0}")]
    Solver(String),

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no eigenvalue falls inside the requested window")]
    EmptyWindow,

    #[error("unknown atom '{0}'")]
    UnknownAtom(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_trial(self, index: u64) -> Self {
        Error::Trial {
            index,
            source: Box::new(self),
        }
    }
}
