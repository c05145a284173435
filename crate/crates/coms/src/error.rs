//! Crate-wide error type and exit-code mapping for the CLI.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A spec or hyperparameter value is out of its valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numeric argument was non-finite or otherwise unusable.
    #[error("invalid input: {0}")]
    Input(String),

    /// The operation was called in a way its contract forbids.
    #[error("usage: {0}")]
    Usage(String),

    /// A persisted file did not match its schema.
    #[error("parse error at record {index}: {message}")]
    Parse { index: usize, message: String },

    /// An MCMC iterate left the representable range.
    #[error("sampler diverged at step {step}")]
    SamplerDiverged { step: usize },

    /// Adds the chain index to an error raised inside a batched run.
    #[error("chain {chain}: {source}")]
    Chain {
        chain: usize,
        #[source]
        source: Box<Error>,
    },

    /// Adds the training location to an error raised inside the train loop.
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Train {
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    /// Violated internal invariant (e.g. shape mismatch between buffers).
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for usage-class errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) | Error::Usage(_) | Error::Parse { .. } => 1,
            Error::Chain { source, .. } | Error::Train { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
