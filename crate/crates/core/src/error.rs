use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid genome: {0}")]
    InvalidGenome(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("cannot renormalize weights: {0}")]
    DegenerateWeights(String),

    #[error("infeasible instance: {0}")]
    Instance(String),

    #[error("operator error: {0}")]
    Operator(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("delta is undefined when the reference TVD is zero")]
    UndefinedDelta,

    #[error("correlation is undefined for constant input")]
    ConstantInput,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
