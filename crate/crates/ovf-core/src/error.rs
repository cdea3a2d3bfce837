use thiserror::Error;

/// Errors raised on malformed inputs or violated construction invariants.
///
/// Mathematical *check failures* (an identity not holding, a residual over
/// tolerance) are not errors: verification routines return structured reports
/// so callers can inspect witnesses. Only inputs that cannot be interpreted
/// at all, or constructions whose preconditions are broken, error out.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum CoreError {
    #[error("atom count mismatch: expected {expected}, got {got}")]
    AtomCountMismatch { expected: usize, got: usize },

    #[error("hilbert dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("not a projection: max residual {max_residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotAProjection { max_residual: f64, tolerance: f64 },

    #[error("canonical projection constraint violated at atom {atom}: {constraint}")]
    CanonicalConstraint { atom: usize, constraint: String },

    #[error("synthesis rejected: identity {identity} fails at atom {atom} (residual {residual:.3e})")]
    SynthesisRejected {
        identity: String,
        atom: usize,
        residual: f64,
    },

    #[error("density is not positive semidefinite at atom {atom}: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { atom: usize, min_eigenvalue: f64 },

    #[error("gram matrix inconsistent at atom {atom}: eigenvalue {eigenvalue:.3e} below PSD floor")]
    GramNotPsd { atom: usize, eigenvalue: f64 },

    #[error("factor data inconsistent at atom {atom}: {detail}")]
    InconsistentFactor { atom: usize, detail: String },

    #[error("infeasible generator draw: {0}")]
    InfeasibleDraw(String),

    #[error("invalid scalar field profile: {0}")]
    InvalidProfile(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CoreError {
    fn from(e: serde_json::Error) -> Self {
        CoreError::Malformed(e.to_string())
    }
}
