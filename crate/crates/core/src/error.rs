use thiserror::Error;

/// Errors raised by the numerical kernels and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parity violation: {0}")]
    Parity(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The integrated curve left the chart at parameter `time`.
    #[error("chart exit at t = {time}: {detail}")]
    ChartExit { time: f64, detail: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("loop validation failed: {0}")]
    LoopValidation(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Schema violation, located by a JSON pointer into the scenario document.
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("unknown registry entry: {0}")]
    Registry(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
