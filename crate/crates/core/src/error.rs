use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("shape mismatch: expected dimension {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("non-finite input: {0}")]
    NumericInput(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("first-order expansion invalid: predicted splitting {0:e} is not positive")]
    ExpansionInvalid(f64),

    #[error("no placement satisfied f_max >= {min_fidelity} (best f_max found {best_f_max})")]
    Infeasible { min_fidelity: f64, best_f_max: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericInput(_) | Error::Convergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
