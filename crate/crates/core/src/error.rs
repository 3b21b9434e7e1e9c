use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative procedure failed to converge or a numeric estimate is unusable.
    #[error("numeric error: {message}")]
    Numeric {
        message: String,
        /// Last iterate, when the failure came from an iteration.
        last: Option<f64>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, last: Option<f64>) -> Self {
        Error::Numeric {
            message: msg.into(),
            last,
        }
    }
}
