//! Crate-wide error type.
//!
//! Two broad classes matter to callers: configuration errors (bad inputs
//! that a user can fix) and runtime errors (I/O, malformed files, infeasible
//! generation). The CLI maps the former to exit code 2 and the rest to 3.
//! Contract violations between modules (for example a point cloud tagged
//! with the wrong frame) are bugs, not errors, and panic instead.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration or arguments.
    #[error("config: {0}")]
    Config(String),

    /// Scene generation could not satisfy its constraints.
    #[error("scene generation: {0}")]
    Generation(String),

    /// A serialized artifact (scene, checkpoint, log) is malformed.
    #[error("format: {0}")]
    Format(String),

    /// Numerical failure inside the trainer.
    #[error("training: {0}")]
    Training(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn generation(msg: impl Into<String>) -> Self {
        Error::Generation(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn training(msg: impl Into<String>) -> Self {
        Error::Training(msg.into())
    }

    /// True for errors a user fixes by changing inputs rather than rerunning.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
