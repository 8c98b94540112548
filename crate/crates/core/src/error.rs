use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("segmentation failed: {0}")]
    Segmentation(String),

    #[error("empty region of interest for label {0}")]
    EmptyRoi(u16),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("non-finite value in feature column `{0}`")]
    NonFinite(String),

    #[error("missing feature `{0}`")]
    MissingFeature(String),

    #[error("scenario assembly failed: {0}")]
    Assembly(String),

    #[error("data leakage: {0}")]
    Leakage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing inputs: {0}")]
    MissingInputs(String),

    #[error("{0}")]
    ScenarioFailures(String),

    #[error("malformed data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
