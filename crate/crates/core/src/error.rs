use thiserror::Error;

/// Errors raised anywhere in the capacity pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{field}: ambient dimension {dim} is not even")]
    OddDimension { field: String, dim: usize },

    #[error("{field}: origin is not an interior point of the body")]
    OriginNotInterior { field: String },

    #[error("{field}: quadratic form is not symmetric positive definite")]
    NotPositiveDefinite { field: String },

    #[error("{field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("direction vector is zero")]
    ZeroDirection,

    #[error("loop has zero symplectic action")]
    ZeroAction,

    #[error("grid of {nodes} nodes is too coarse for {modes} modes (need at least {needed})")]
    GridTooSmall {
        nodes: usize,
        modes: usize,
        needed: usize,
    },

    #[error("gradient unavailable: {0}")]
    NonSmooth(String),

    #[error("quadrature did not settle: {coarse} vs {fine} (relative difference {rel:.3e})")]
    Quadrature { coarse: f64, fine: f64, rel: f64 },

    #[error("iteration did not converge: best value {best}, bound gap {gap:.3e}")]
    NotConverged { best: f64, gap: f64 },

    #[error("no multistart run converged: best quotient {best_quotient}, gradient norm {grad_norm:.3e}")]
    NoStartConverged { best_quotient: f64, grad_norm: f64 },

    #[error("loop is not a closed characteristic (fit residual {residual:.3e})")]
    NotCharacteristic { residual: f64 },

    #[error("carrier leaves the boundary (residual {residual:.3e})")]
    OffBoundary { residual: f64 },

    #[error("body is not centrally symmetric (asymmetry {asymmetry:.3e})")]
    Asymmetric { asymmetry: f64 },

    #[error("intersection is empty or degenerate (depth {depth:.3e})")]
    EmptyIntersection { depth: f64 },

    #[error("recipe error at `{path}`: {message}")]
    Recipe { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
