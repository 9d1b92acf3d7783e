use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("clip region incompatible with cone: {0}")]
    IncompatibleClip(String),
    #[error("calibration labeling mismatch: {0}")]
    Labeling(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("diverges: {0}")]
    Divergent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
