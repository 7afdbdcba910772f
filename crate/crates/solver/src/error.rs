use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    InvalidModel(#[from] ModelError),
    /// The LP engine broke down (singular basis, non-finite pivots).
    #[error("numerical failure in LP engine ({rows} rows, {cols} cols): {detail}")]
    Numerical { rows: usize, cols: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
