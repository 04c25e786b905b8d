use thiserror::Error;

/// Errors surfaced by the library.
///
/// `PreconditionViolated` is reserved for inputs that are structurally fine
/// but outside a documented validity domain (for instance requesting the
/// analytic qubit--SET spectrum at a parameter point where the quartic does
/// not reduce); callers that map errors to exit codes treat it separately
/// from malformed input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: max |A - A^dag| entry {deviation:.3e} exceeds tol {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("degenerate parameter point: {0}")]
    DegenerateParameters(String),

    #[error("basis is numerically dependent: {0}")]
    DegenerateBasis(String),

    #[error("Hilbert dimension {dim} exceeds the supported cap {cap} for this operation")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("negative rate {0} in dissipator")]
    NegativeRate(f64),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("polynomial degree overflow: result degree {needed} exceeds capacity {max}")]
    DegreeOverflow { needed: usize, max: usize },

    #[error("integrator step size underflow at t = {t}")]
    StepSizeFailure { t: f64 },

    #[error("eigensolver failed to converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("numerical self-check failed: {0}")]
    SelfCheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
