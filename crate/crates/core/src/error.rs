use thiserror::Error;

/// Errors produced by the library.
///
/// The variants split along the line the command-line front end cares about;
/// see [`Error::is_io`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the environment (the file system) rather
    /// than by invalid inputs; undecodable images count as invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Codec(image::ImageError::IoError(_)))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
