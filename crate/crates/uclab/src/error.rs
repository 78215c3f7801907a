//! Error types shared across the laboratory.

use thiserror::Error;

/// Crate-wide result alias.
pub type UcResult<T> = Result<T, UcError>;

/// Errors raised by geometry, quadrature, solver and verifier operations.
#[derive(Debug, Error)]
pub enum UcError {
    /// A domain or grid parameter violates its invariant.
    #[error("invalid domain: {context}")]
    InvalidDomain { context: String },

    /// A geometric operation produced an empty result (e.g. erosion radius
    /// at least the inradius).
    #[error("empty result: {context}")]
    EmptyResult { context: String },

    /// A requested region is empty or lies outside the field's domain.
    #[error("region error: {context}")]
    RegionError { context: String },

    /// Geometry preconditions of a chain construction are violated.
    #[error("geometry infeasible: {context}")]
    GeometryInfeasible { context: String },

    /// A path or chain leaves the required erosion of the domain.
    #[error("path escapes erosion: {context}")]
    PathEscapesErosion { context: String },

    /// Cube union is disconnected or an endpoint lies outside it.
    #[error("disconnected union or point outside: {context}")]
    DisconnectedUnion { context: String },

    /// An exponent lies outside its admissible range.
    #[error("exponent out of range: {context}")]
    ExponentOutOfRange { context: String },

    /// A potential/drift class membership required by an explicit-mode
    /// verifier does not hold.
    #[error("class violation: {context}")]
    ClassViolation { context: String },

    /// An iterative method failed to reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {context}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    /// A manufactured solution vanishes somewhere on the grid.
    #[error("field vanishes on the domain: {context}")]
    ZeroCrossing { context: String },

    /// A scalar parameter violates its admissible range.
    #[error("parameter out of range: {context}")]
    ParameterRange { context: String },

    /// Weight dynamic range exceeds what the grid can resolve.
    #[error("weight dynamic range too large: {context}")]
    WeightRange { context: String },

    /// A fit over an ensemble is infeasible.
    #[error("fit infeasible (member {member}): {context}")]
    FitInfeasible { member: usize, context: String },

    /// I/O error while reading or writing grid fields or reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl UcError {
    pub fn invalid_domain(context: impl Into<String>) -> Self {
        UcError::InvalidDomain {
            context: context.into(),
        }
    }

    pub fn region(context: impl Into<String>) -> Self {
        UcError::RegionError {
            context: context.into(),
        }
    }

    pub fn parameter(context: impl Into<String>) -> Self {
        UcError::ParameterRange {
            context: context.into(),
        }
    }
}
