use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (pivot {pivot:e} at column {col})")]
    NotPsd { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mode requires dimension 1, got {0}")]
    ModeUnsupportedForDimension(usize),
    #[error("horizon {0} exceeds the sign-vector cap of 5")]
    HorizonTooLarge(usize),
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("PSD cut loop did not converge within {0} iterations")]
    CutLimitExceeded(usize),
    #[error("moment set at stage {stage} (conditioning point {point:?}) is infeasible")]
    InfeasibleMomentSet { stage: usize, point: Option<usize> },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error JSON and FFI status mapping.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::NotPsd { .. } => "not_psd",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::ModeUnsupportedForDimension(_) => "mode_unsupported_for_dimension",
            Error::HorizonTooLarge(_) => "horizon_too_large",
            Error::LpUnbounded => "lp_unbounded",
            Error::LpInfeasible => "lp_infeasible",
            Error::NumericalFailure(_) => "numerical_failure",
            Error::CutLimitExceeded(_) => "cut_limit_exceeded",
            Error::InfeasibleMomentSet { .. } => "infeasible_moment_set",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::UnsupportedModel(_) => "unsupported_model",
            Error::Infeasible(_) => "infeasible",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
