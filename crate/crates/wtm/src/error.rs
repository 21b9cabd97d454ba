use std::io;
use thiserror::Error;

/// Errors produced by the library.
///
/// The three non-IO categories map onto distinct CLI exit codes: argument
/// and configuration errors cover contract violations at API boundaries,
/// while parse errors cover malformed dataset and model files.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation argument violated its contract (bad probability, empty
    /// range, dimension mismatch, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Inconsistent configuration, e.g. a model and a dataset that disagree
    /// on the feature width.
    #[error("configuration error: {0}")]
    Config(String),

    /// A dataset or model file failed to parse.
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// File-format errors. Each failure mode is a distinct variant so callers
/// and tests can tell them apart.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("missing or malformed header: {0}")]
    Header(String),

    #[error("unsupported format version {0}")]
    Version(u8),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("row {row}: expected {expected} feature bits, found {found}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: label {label} out of range (dataset declares {n_classes} classes)")]
    LabelRange {
        row: usize,
        label: u32,
        n_classes: u32,
    },

    #[error("row {row}: unknown symbol {symbol:?}")]
    Symbol { row: usize, symbol: char },

    #[error("{0} trailing bytes after the declared payload")]
    TrailingBytes(usize),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
