use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the optimization, simulation and persistence layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration failed at step {step}: non-finite state")]
    Integration { step: usize },

    #[error("longitudinal speed v_x must be nonzero")]
    ZeroSpeed,

    #[error("evaluation failed at search iteration {iteration}: {source}")]
    Search {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no robust-feasible point found: {0}")]
    Infeasible(String),

    #[error("library format: {0}")]
    Format(String),

    #[error("library version {found} not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checksum mismatch in {0}")]
    Checksum(PathBuf),

    #[error("track file: {0}")]
    Track(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
