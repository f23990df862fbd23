use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument {z} lies within {distance:e} of a lattice point; use the regularized function")]
    NearSingularity { z: String, distance: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("random sequential addition placed {placed} of {requested} disks before exhausting {attempts} candidate draws")]
    Generation {
        placed: usize,
        requested: usize,
        attempts: u64,
    },

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing structural sum for index {0}")]
    MissingIndex(String),

    #[error("Eisenstein order {needed} exceeds the cached maximum {available}; rebuild the cell with a larger max order")]
    Resource { needed: usize, available: usize },

    #[error("successive approximations did not converge in {iterations} iterations (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("Padé approximant has a pole: rho * nu * alpha = {0}")]
    Pole(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line interface: 2 for validation
    /// failures, 3 for convergence and generation failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidCell(_)
            | Error::Domain(_)
            | Error::NearSingularity { .. }
            | Error::InvalidConfiguration(_)
            | Error::MissingIndex(_)
            | Error::Resource { .. }
            | Error::Pole(_) => 2,
            Error::Generation { .. } | Error::NonConvergence { .. } => 3,
            Error::Trial { source, .. } => source.exit_code(),
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
