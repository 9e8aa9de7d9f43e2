//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix entries must be finite")]
    NotFinite,

    #[error("matrix is not positive definite (pivot {index} = {pivot:e}); raise lambda")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("zero diagonal entry {index} in triangular solve")]
    ZeroDiagonal { index: usize },

    #[error("group size {group_size} does not divide {rows} rows")]
    InvalidGroupSize { group_size: usize, rows: usize },

    #[error("integer entry {value} outside box [0, {box_hi}]")]
    OutOfBox { value: i64, box_hi: i64 },

    #[error("no sampling temperature exists for K = {k} at dimension m = {m} (requires K < e^(2m))")]
    DegenerateTemperature { k: u32, m: usize },

    #[error("enumeration space of {points} points exceeds the {limit}-point guard")]
    TooLarge { points: u128, limit: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("layer {index}: {source}")]
    AtLayer {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("file format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
