use thiserror::Error;

/// Errors raised by the numerical core and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:.3e} below tolerance {tol:.3e}")]
    SingularMatrix { pivot: f64, tol: f64 },
    #[error("singular block {block}: {source}")]
    SingularBlock {
        block: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid quantizer resolution {0}: must be at least one bit")]
    InvalidResolution(i64),
    #[error("invalid user index {index} (K = {users})")]
    InvalidUser { index: usize, users: usize },
    #[error("invalid quantizer profile: {0}")]
    InvalidProfile(String),
    #[error("channel is identically zero")]
    ZeroChannel,
    #[error("precoder is identically zero")]
    ZeroPrecoder,
    #[error("effective channel Gram matrix is rank deficient")]
    RankDeficient,
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid experiment: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
