use thiserror::Error;

/// Errors produced by collectives, transports, training runs, and model fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Binding or connecting a transport failed for the given rank.
    #[error("transport setup failed at rank {rank}: {source}")]
    TransportSetup {
        rank: usize,
        #[source]
        source: std::io::Error,
    },

    /// The peer closed the link while a frame was expected.
    #[error("link closed by peer")]
    LinkClosed,

    /// A frame violated the wire format or arrived out of protocol order.
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("cost model fit failed: {0}")]
    Fit(String),

    #[error("training failed at step {step}: {reason}")]
    Training { step: usize, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
