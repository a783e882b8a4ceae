use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vertex or coin label does not exist on the topology.
    #[error("index error: {0}")]
    Index(String),

    /// An experiment or operator was assembled from inconsistent parts.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A built operator failed its unitarity (or similar) check.
    #[error("numerical integrity failure: {what} (residual {residual:.3e})")]
    NumericalIntegrity { what: String, residual: f64 },

    #[error("eigendecomposition did not converge (residual {residual:.3e})")]
    Convergence { residual: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("spectral gap undefined: every frequency coincides with the reference {reference}")]
    UndefinedGap { reference: f64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }
}
