use thiserror::Error;

/// Errors surfaced by construction, evaluation, and check routines.
///
/// Numerical verdicts (member / non-member / violated / inconclusive) are not
/// errors; they are ordinary results. An `Error` means the question itself was
/// ill-posed: mismatched dimensions, a base point outside the set, a geodesic
/// leaving its domain of definition, and so on.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("seminorm index {index} out of range (space has {count} seminorms)")]
    SeminormIndex { index: usize, count: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("base point is not in the set (max seminorm distance {distance:.3e} exceeds tol {tol:.3e})")]
    NotInSet { distance: f64, tol: f64 },

    #[error("associated direction is not an adjacent tangent vector (worst final quotient {quotient:.3e})")]
    NotAdjacent { quotient: f64 },

    #[error("closed-form geodesic leaves its domain at t = {t_limit:.6}")]
    DomainBoundary { t_limit: f64 },

    #[error("integration produced a non-finite state at t = {t:.6}")]
    BlowUp { t: f64 },

    #[error("base loop is not pointwise on the unit sphere (max deviation {deviation:.3e})")]
    OffSphere { deviation: f64 },

    #[error("velocity is not pointwise tangent to the sphere (max inner product {deviation:.3e})")]
    NotTangentToSphere { deviation: f64 },

    #[error("shift {shift} is not an integer multiple of the grid step {step}")]
    UnalignedShift { shift: f64, step: f64 },

    #[error("sampler {label} exhausted after {attempts} rejected proposals")]
    SamplerExhausted { label: String, attempts: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unknown id: {0}")]
    UnknownId(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
