//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violation in scene `{scene_id}`, field `{field}`: {message}")]
    Invariant {
        scene_id: String,
        field: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("brute-force solver accepts at most 9x9 matrices, got {rows}x{cols}")]
    BruteForceSize { rows: usize, cols: usize },

    #[error("trajectory length mismatch: expected {expected} waypoints, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("MOTA is undefined when gt_total is zero")]
    ZeroGtTotal,

    #[error("MOTP is undefined when there are no matched pairs")]
    ZeroMatches,

    #[error("degenerate polygon: {0} vertices (need at least 3)")]
    DegeneratePolygon(usize),

    #[error("channel index {index} out of range ({channels} channels)")]
    ChannelOutOfRange { index: usize, channels: u32 },

    #[error("raster geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("bad raster file at byte {offset}: {message}")]
    RasterFormat { offset: u64, message: String },
}

impl Error {
    /// True for errors caused by bad user input, as opposed to internal
    /// failures. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Invariant { .. }
                | Error::Validation(_)
                | Error::RasterFormat { .. }
        )
    }

    pub(crate) fn invariant(
        scene_id: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Invariant {
            scene_id: scene_id.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}
