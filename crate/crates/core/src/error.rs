use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration has {excitations} excitations; only sectors 0..=2 are represented")]
    OutOfSubspace { excitations: u32 },

    #[error("coincident sites {i} and {j} at position {position}")]
    SingularGeometry { i: usize, j: usize, position: f64 },

    #[error("symmetric eigensolver failed on a {dim}x{dim} block (sector {sector})")]
    Numerical { sector: usize, dim: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("verification failed: {}", .0.join("; "))]
    Verification(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
