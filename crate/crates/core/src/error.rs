use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed interval [{lo}, {hi}]")]
    MalformedInterval { lo: f64, hi: f64 },

    #[error("divergent propertime integral: interval touches T = 0")]
    Divergent,

    #[error("need at least 2 jackknife blocks, got {0}")]
    TooFewBlocks(usize),

    #[error("singular design matrix in constrained fit")]
    SingularFit,

    #[error("fit abscissa {0} outside the fit range 0 < x < 0.1")]
    FitRange(f64),

    #[error("validity bands never separate on [{lo}, {hi}]")]
    NoBoundInRange { lo: f64, hi: f64 },

    #[error("ensemble dimension {found} does not match geometry (needs {expected})")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed ensemble file: {0}")]
    MalformedFile(String),

    #[error("ensemble checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    ChecksumMismatch { stored: u64, computed: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
