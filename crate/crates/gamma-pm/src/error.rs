use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the
/// numerical pipelines: domain violations, non-convergence, geometry
/// degeneracies and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("degenerate slice: {0}")]
    DegenerateSlice(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("zero measure: {0}")]
    ZeroMeasure(String),

    #[error("uncovered atom: {0}")]
    Coverage(String),

    #[error("time step underflow: {0}")]
    Stiffness(String),

    #[error("analytic gradient mismatch: {0}")]
    GradientCheck(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Divergence(_) => "divergence",
            Error::Convergence(_) => "convergence",
            Error::Resolution(_) => "resolution",
            Error::DegenerateSlice(_) => "degenerate-slice",
            Error::Geometry(_) => "geometry",
            Error::ZeroMeasure(_) => "zero-measure",
            Error::Coverage(_) => "coverage",
            Error::Stiffness(_) => "stiffness",
            Error::GradientCheck(_) => "gradient-check",
            Error::Validation(_) => "validation",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code contract: 2 = validation, 3 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) => 2,
            Error::Convergence(_) | Error::Divergence(_) | Error::Stiffness(_) => 3,
            _ => 1,
        }
    }
}
