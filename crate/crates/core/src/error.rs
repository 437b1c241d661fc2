//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by the numeric core.
///
/// Contract violations (shape mismatches, out-of-range arguments) and
/// data-driven failures (malformed files, degenerate inputs) share one enum
/// so callers can bubble everything with `?`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch, left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("{op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },

    #[error("{op}: non-finite entries in input")]
    NonFinite { op: &'static str },

    #[error("{op}: rank-deficient input, zero column norm at column {column}")]
    RankDeficient { op: &'static str, column: usize },

    #[error("{op}: no convergence, {detail}")]
    NoConvergence { op: &'static str, detail: String },

    #[error("saliency is identically zero, every connection sensitivity vanishes")]
    DegenerateSaliency,

    #[error("loss {loss} requires ground-truth labels")]
    MissingLabels { loss: &'static str },

    #[error("{path}: {detail}")]
    IdxFormat { path: PathBuf, detail: String },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("unsupported format marker {found:?}, expected {expected:?}")]
    FormatVersion { found: String, expected: &'static str },

    #[error("training loss became non-finite at iteration {iteration} (lr {lr})")]
    NanLoss { iteration: usize, lr: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
