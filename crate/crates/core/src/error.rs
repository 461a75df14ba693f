use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TensError>;

#[derive(Debug, Error)]
pub enum TensError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("negative entry {value} at ({i}, {j}, {k})")]
    NegativeEntry {
        i: usize,
        j: usize,
        k: usize,
        value: f64,
    },

    #[error("tensor is not (1,2)-symmetric: {0}")]
    Asymmetric(String),

    #[error("slice {0} is identically zero")]
    ZeroSlice(usize),

    #[error("record log is empty")]
    EmptyLog,

    #[error("rank {rank} out of range for extent {extent}")]
    RankOutOfRange { rank: usize, extent: usize },

    #[error("objective is zero; the tensor has no mass in the requested subspace")]
    DegenerateObjective,

    #[error("expansion term {0} has zero norm")]
    ZeroNormTerm(usize),

    #[error("subtensor is empty")]
    EmptySubtensor,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl TensError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TensError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        TensError::DimensionMismatch(msg.into())
    }
}
