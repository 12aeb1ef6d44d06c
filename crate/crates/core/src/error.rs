// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("waypoint {index} projects outside the image at ({u}, {v})")]
    OutOfFrame { index: usize, u: f64, v: f64 },

    #[error("waypoint {index}: depth {depth} outside [{min}, {max}]")]
    DepthOutOfRange {
        index: usize,
        depth: f64,
        min: f64,
        max: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("state error: {0}")]
    State(String),

    #[error("forward direction undefined: {0}")]
    UndefinedDirection(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
