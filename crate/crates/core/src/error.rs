use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("checkpoint {0} not found")]
    NotFound(u64),

    #[error("configuration error: {0}")]
    Config(String),

    /// An environment or learner was driven outside its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("malformed checkpoint file: {0}")]
    Format(String),

    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_cycle(self, cycle: usize) -> Self {
        match self {
            e @ Error::Cycle { .. } => e,
            e => Error::Cycle {
                cycle,
                source: Box::new(e),
            },
        }
    }
}
