use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {field} = {value}")]
    ParamDomain { field: &'static str, value: f64 },

    #[error("basis size must be at least 2, got {0}")]
    BasisTooSmall(usize),

    #[error("operator dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("matrix is not Hermitian: max asymmetry {asymmetry:.3e} (tolerance {tolerance:.3e})")]
    NonHermitian { asymmetry: f64, tolerance: f64 },

    #[error("series order {0} not supported (max {1})")]
    UnsupportedOrder(usize, usize),

    #[error("inductance renormalization lambda = {0} exceeds bare inductance (must be < 1)")]
    RenormalizationTooLarge(f64),

    #[error("overdamped regime: gamma = {gamma:.3e} exceeds omega = {omega:.3e}")]
    Overdamped { gamma: f64, omega: f64 },

    #[error("zeta split is degenerate at zeta = {0} (must lie strictly inside (0, 1))")]
    DegenerateZetaSplit(f64),

    #[error("steady state is not unique: spectral gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateSteadyState { gap: f64, threshold: f64 },

    #[error("time step too large: dt * ||G|| = {0:.3e} must be < 0.1")]
    StepSizeTooLarge(f64),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("plot input error: {0}")]
    PlotInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
