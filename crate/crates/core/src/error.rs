use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate link: {0}")]
    DegenerateLink(String),

    /// A yield model produced a value that is not a probability.
    #[error("{model} yield {value:e} is outside [0, 1]")]
    YieldOutOfRange { model: &'static str, value: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 model domain, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParam { .. } => 2,
            Error::Domain(_)
            | Error::DegenerateLink(_)
            | Error::YieldOutOfRange { .. }
            | Error::Capacity(_) => 3,
            Error::Internal(_) | Error::Io(_) => 4,
        }
    }

    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
