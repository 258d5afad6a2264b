use thiserror::Error;

use crate::energy::TermId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of a formula (non-positive stretch,
    /// negative weight, empty curve, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An exponential term produced a non-finite value.
    #[error("term {term} saturated: {detail}")]
    Saturation { term: TermId, detail: String },

    /// Loss normalisation is impossible because a mode has only zero stresses.
    #[error("cannot normalise {mode} loss: all data stresses are zero")]
    Normalization { mode: &'static str },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown dataset '{0}'")]
    UnknownDataset(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
