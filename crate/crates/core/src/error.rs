use thiserror::Error;

/// Errors raised by the numerical and channel-level operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("map is not completely positive (smallest Choi eigenvalue {min_eig:.3e})")]
    NotCp { min_eig: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("operator norm {norm:.12} exceeds 1")]
    NormTooLarge { norm: f64 },

    #[error("iteration budget of {budget} exhausted in {routine}")]
    NoConvergence { routine: &'static str, budget: usize },

    #[error("dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("ensemble does not realise the lifted Schur multiplier (residual {residual:.3e})")]
    NotAFactorisation { residual: f64 },

    #[error("ensemble unitary {index} is not block diagonal (off-diagonal block norm {residual:.3e})")]
    NotBlockDiagonal { index: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
