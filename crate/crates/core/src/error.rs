use std::path::PathBuf;

use thiserror::Error;

use crate::lowrank::TraceRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// Highlight separation stopped making progress in the wrong direction.
    #[error("optimization diverged after {} iterations", trace.len())]
    Convergence { trace: Vec<TraceRecord> },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Light correspondence could not be decided from the available probes.
    #[error("ambiguous light correspondence, {} candidate pairings", candidates.len())]
    Ambiguity { candidates: Vec<Vec<(usize, usize)>> },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid scene description: {0}")]
    Scene(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
