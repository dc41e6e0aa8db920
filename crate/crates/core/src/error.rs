use thiserror::Error;

/// Errors produced by chain construction, enumeration, and bound evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("state count {n} is below the minimum of 2")]
    TooFewStates { n: usize },

    #[error("row {row} is not stochastic: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("chain is not irreducible: {reason}")]
    NotIrreducible { reason: String },

    #[error("stationary distribution assigns no mass to state {state}")]
    ZeroMassState { state: usize },

    #[error("stationary system is singular or ill-conditioned: {detail}")]
    SingularSystem { detail: String },

    #[error("chain is not reversible (detailed-balance residual {residual:e} > tol {tol:e})")]
    NotReversible { residual: f64, tol: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("step count {n} exceeds the supported maximum 2^31")]
    StepCountTooLarge { n: u64 },

    #[error("exact enumeration over {n} states exceeds the threshold of {max} states")]
    StateSpaceTooLarge { n: usize, max: usize },

    #[error("subsets are limited to 64 states, chain has {n}")]
    TooManyStatesForSubset { n: usize },

    #[error("subset is empty or covers the whole state space")]
    ImproperSubset,

    #[error("state index {state} is out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },

    #[error("the strict-half family is empty: every proper subset has mass exactly 1/2")]
    EmptyFamily {
        /// Infimum over the closed-half family, reported alongside per policy.
        closed_value: f64,
    },

    #[error("test function is not mean-zero under pi (integral {integral:e})")]
    NotMeanZero { integral: f64 },

    #[error("test function is not normalized in L2(pi) (norm^2 {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("parameter out of domain: {detail}")]
    DomainError { detail: String },

    #[error("bad parameters: {detail}")]
    BadParams { detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(detail: impl Into<String>) -> Self {
        Error::DomainError {
            detail: detail.into(),
        }
    }

    pub(crate) fn bad_params(detail: impl Into<String>) -> Self {
        Error::BadParams {
            detail: detail.into(),
        }
    }
}
