use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("not a minimal generalization: {0}")]
    NotMinimalGeneralization(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("trips table is empty")]
    EmptyTable,

    #[error("index range out of bounds: {0}")]
    OutOfRange(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("no disjoint origin/destination pair after {rejections} consecutive rejected draws")]
    PoolExhausted { rejections: u64 },

    #[error("mining exceeded its deadline after {levels_done} completed levels")]
    Timeout { levels_done: usize },

    #[error("mining exceeded its memory budget ({bytes} bytes estimated) after {levels_done} completed levels")]
    MemoryLimit { bytes: usize, levels_done: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
