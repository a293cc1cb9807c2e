use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric overflow at ring {ring} (fine step {step}): {detail}")]
    NumericOverflow {
        ring: usize,
        step: usize,
        detail: String,
    },

    #[error("no normal cone: {0}")]
    NoNormalCone(String),

    #[error("singular step matrix at coarse interval {interval}, fine step {step}")]
    SingularStep { interval: usize, step: usize },

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("example `{0}` has no analytic oracle")]
    UnsupportedOracle(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
