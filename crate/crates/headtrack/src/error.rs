use crate::pose::Axis;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by filtering, fitting, and stream handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("timestamp {current} does not advance past {previous}")]
    TimestampOrder { previous: f64, current: f64 },

    #[error("innovation covariance is numerically singular (condition {condition:.3e}); re-initialize the session")]
    DegradedCovariance { condition: f64 },

    #[error("session is degraded; re-initialize before stepping")]
    SessionDegraded,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("missing {axis} axis")]
    MissingAxis { axis: Axis },

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_frame(self, index: usize) -> Error {
        Error::Frame {
            index,
            source: Box::new(self),
        }
    }
}
