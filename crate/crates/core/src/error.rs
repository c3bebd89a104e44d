use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem dimensions: {0}")]
    InvalidDims(String),

    #[error("non-finite matrix entries")]
    NonFinite,

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("eigenphase {phase} lies within {margin:e} of the branch cut")]
    BranchCut { phase: f64, margin: f64 },

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("truncation breached: {0}")]
    Truncation(String),

    #[error("positivity violated: minimum eigenvalue {0:e}")]
    Positivity(f64),

    #[error("unphysical result: {0}")]
    Unphysical(String),
}
