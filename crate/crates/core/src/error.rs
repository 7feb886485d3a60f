use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// Invalid run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Failure during time integration (NaN, step budget, non-finite flux).
    #[error("solver error: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
