use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("inconsistent data: {0}")]
    Consistency(String),
    #[error("non-finite loss at trial {trial}, epoch {epoch}, step {step}")]
    NonFiniteLoss {
        trial: usize,
        epoch: usize,
        step: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
