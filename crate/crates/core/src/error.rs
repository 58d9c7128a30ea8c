use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An eigenvalue among the requested `d` is numerically zero.
    #[error("rank deficient: eigenvalue {value:e} at or below tolerance {tol:e}")]
    RankDeficient { value: f64, tol: f64 },

    #[error("eigensolver did not converge after {iterations} restarts (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("perturbed probability {value} exceeds 1")]
    EntryOverflow { value: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("bootstrap replicate {index}, sample {sample}: {source}")]
    Replicate {
        index: usize,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
