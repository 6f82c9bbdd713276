use thiserror::Error;

use crate::func::FunctionId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{function} is undefined at x = {x}")]
    Domain { function: FunctionId, x: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged (non-finite loss at iteration {iteration}, seed {seed})")]
    TrainingDiverged { iteration: usize, seed: u64 },

    #[error("unsupported breakpoint count {count}: a single tag bit covers at most 16 breakpoints")]
    UnsupportedBreakpointCount { count: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("LUT capacity exceeded: {needed} bytes needed for {breakpoints} segments, bank holds {bank_bytes}")]
    Capacity {
        needed: usize,
        breakpoints: usize,
        bank_bytes: usize,
    },

    #[error("unknown {what} `{name}` (known: {})", known.join(", "))]
    Unknown {
        what: &'static str,
        name: String,
        known: Vec<String>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
