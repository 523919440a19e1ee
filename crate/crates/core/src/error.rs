use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A singular Neumann solve received a right-hand side with a nonzero
    /// component along the constant null vector.
    #[error("incompatible right-hand side: relative defect {defect:.3e} exceeds {tolerance:.1e}")]
    Incompatible { defect: f64, tolerance: f64 },

    #[error("CFL violation at t = {time}: max speed {max_speed:.6e} needs dt <= {dt_limit:.6e}, got {dt:.6e}")]
    Cfl {
        time: f64,
        max_speed: f64,
        dt: f64,
        dt_limit: f64,
    },

    #[error("non-finite value detected at t = {time}")]
    NonFinite { time: f64 },

    #[error("profile hierarchy is missing order {0}")]
    MissingOrder(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
