use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (‖A − A*‖ = {residual:e}, tolerance {tol:e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e}, floor {floor:e})")]
    NotPsd { min_eig: f64, floor: f64 },

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("completion failed at block step ({row_block}, {col_block}): {reason}")]
    Completion {
        row_block: usize,
        col_block: usize,
        reason: String,
    },

    #[error("matrix format error{}: {message}", location_suffix(.row, .col))]
    Format {
        message: String,
        row: Option<usize>,
        col: Option<usize>,
    },
}

fn location_suffix(row: &Option<usize>, col: &Option<usize>) -> String {
    match (row, col) {
        (Some(r), Some(c)) => format!(" at row {r}, column {c}"),
        (Some(r), None) => format!(" at row {r}"),
        _ => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
