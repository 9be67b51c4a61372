use std::path::PathBuf;

use thiserror::Error;

use crate::octree::CellIndex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in input point")]
    NonFinite,
    #[error("regression needs at least {needed} points, has {have}")]
    InsufficientPoints { needed: u64, have: u64 },
    #[error("degenerate regression: all points coincide")]
    DegenerateRegression,
    #[error("planes do not intersect (parallel or near-singular)")]
    NoIntersection,
    #[error("octree input stream is empty")]
    EmptyStream,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cell {0} not found")]
    CellNotFound(CellIndex),
    #[error("seed region holds {have} points, need at least {needed}")]
    TooFewSeedPoints { needed: usize, have: usize },
    #[error("no plane found in seed region")]
    NoPlaneFound,
    #[error("unrecognized point format: {0}")]
    UnrecognizedFormat(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("corrupt octree data in {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
