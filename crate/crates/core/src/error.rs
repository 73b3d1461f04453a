use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the annotation, tracking and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest failed: {0}")]
    Ingest(String),

    #[error("missing or invalid metadata: {0}")]
    Metadata(String),

    #[error("mask error: {0}")]
    Mask(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("seed error: {0}")]
    Seed(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("video {0} has no evaluable frames")]
    EmptyVideo(String),

    #[error("cannot aggregate an empty report")]
    EmptyReport,

    #[error("unknown video {0}")]
    UnknownVideo(String),

    #[error("video {0} is locked by another writer")]
    Locked(String),

    #[error("session replay diverged at event {line}: {reason}")]
    Replay { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::result::Result<T, std::io::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}

impl<T> IoContext<T> for std::result::Result<T, serde_json::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }
}

impl<T> IoContext<T> for std::result::Result<T, image::ImageError> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Image {
            path: path.into(),
            source,
        })
    }
}
