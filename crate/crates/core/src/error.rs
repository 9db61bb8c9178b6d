//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building operators, decomposing them,
/// or reducing states.
///
/// `ContractViolation` and `EigenConvergence` indicate that a numerical
/// guarantee was breached and any downstream result would be untrustworthy;
/// callers should treat them as fatal rather than recoverable input errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range for a {sites}-site register")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("basis state {bits:#x} out of range for {sites} sites")]
    BasisOutOfRange { bits: u64, sites: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not symmetric: max |A - A^T| = {max_asym:.3e}")]
    NotSymmetric { max_asym: f64 },

    #[error("eigensolver failed to converge (LAPACK info = {info})")]
    EigenConvergence { info: i32 },

    #[error("numerical contract violated: {0}")]
    ContractViolation(String),

    #[error("site subset is empty")]
    EmptySubset,

    #[error("site subsets overlap on mask {0:#x}")]
    OverlappingSubsets(u64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("control and target sites coincide (site {0})")]
    EqualControlTarget(usize),

    #[error("velocity fit needs at least two points, got {0}")]
    TooFewPoints(usize),
}
