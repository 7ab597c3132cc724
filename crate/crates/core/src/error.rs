use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures reported by the simplex solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    /// The solver could not certify its answer; never returned alongside a
    /// solution.
    #[error("simplex numerical failure: {0}")]
    NumericalFailure(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HullError {
    /// No points at all. Coincident points are not an error.
    #[error("convex hull of an empty point set")]
    DegenerateInput,
    #[error("point dimension {0} is outside the supported range 1..=6")]
    UnsupportedDimension(usize),
    #[error("point has {got} coordinates, cloud dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite point coordinate")]
    NonFinite,
    #[error("hull construction lost consistency: {0}")]
    NumericalFailure(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("vector is too short to define a direction")]
    ZeroVector,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Hull(#[from] HullError),
    /// The witness is not strictly inside every contact's dual cone, so the
    /// generator normalization would divide by (nearly) zero.
    #[error("witness lies on the boundary of the dual cone of generator column {column}")]
    WitnessOnBoundary { column: usize },
    #[error("wrench is expressed about a different point than the constraint anchor")]
    AnchorMismatch,
    #[error("configuration is constrained but no wrench constraint matrix was supplied")]
    MissingWcm,
}
