use std::io;

/// Errors raised by the laboratory.
///
/// Variants mirror the failure modes of the individual operations; the
/// harness maps them onto exit codes and report lines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cube with side {side} is below grid resolution (spacing {spacing}, need {required} cells per axis)")]
    CubeBelowResolution {
        side: f64,
        spacing: f64,
        required: usize,
    },

    #[error("cube centered at {center:?} with side {side} leaves the grid domain")]
    CubeOutsideDomain { center: Vec<f64>, side: f64 },

    #[error("rearrangement level {0} outside (0, 1]")]
    LambdaOutOfRange(f64),

    #[error("three-lattice cover failed for cube centered at {center:?} with side {side}")]
    LatticeCover { center: Vec<f64>, side: f64 },

    #[error("dyadic tree has no depth below the queried cube")]
    DepthExhausted,

    #[error("kernel has no antiderivative or cancellation rule for the singular cell")]
    SingularCellUnhandled,

    #[error("kernel modulus is not Dini-integrable; tail integral diverges")]
    TailNotConvergent,

    #[error("computation domain too small: {0}")]
    DomainTooSmall(String),

    #[error("operator '{0}' carries no diagonal part")]
    NoDiagonalPart(String),

    #[error("sparse family has not been audited")]
    UnauditedFamily,

    #[error("support of f is not contained in the starting cube")]
    SupportNotContained,

    #[error("|Tf| outside the covered region may reach {bound:.3e}, above tolerance {tolerance:.3e}")]
    RingBudgetExceeded { bound: f64, tolerance: f64 },

    #[error("operation requires dimension {expected}, got {got}")]
    DimensionUnsupported { expected: &'static str, got: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("gradient average vanishes on the cube")]
    ZeroGradient,

    #[error("unknown operator label '{0}'")]
    UnknownOperator(String),

    #[error("invalid configuration field '{field}': {reason}")]
    Config { field: String, reason: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
