use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bounds: a = {a} must be strictly less than b = {b}")]
    InvalidBounds { a: f64, b: f64 },

    #[error("invalid node count: grid needs at least one node")]
    InvalidCount,

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("density value {value} at node {index} is not strictly positive and finite")]
    NonpositiveDensity { index: usize, value: f64 },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("no value exceeds the floor {floor}")]
    AllBelowFloor { floor: f64 },

    #[error("degenerate energy density: centered norm {value:e} <= threshold {threshold:e}")]
    DegenerateEnergy { value: f64, threshold: f64 },

    #[error("target {target} outside the open interval ({min}, {max})")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },

    #[error("infeasible moment constraints: {0}")]
    InfeasibleConstraints(String),

    #[error("singular Hessian: observables are linearly dependent or constant")]
    SingularHessian,

    #[error("step instability at stage {stage}: non-finite or nonpositive intermediate state (dt too large?)")]
    StepInstability { stage: usize },

    #[error("constraint re-projection infeasible: would require density below the floor")]
    ProjectionInfeasible,

    #[error("initial density violates constraints: {0}")]
    ConstraintViolation(String),

    #[error("zero field: quadrature norm below 1e-14")]
    ZeroField,

    #[error("invalid exponent k = {0}: must be > 1")]
    InvalidExponent(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code, written into run summaries.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidBounds { .. } => "invalid-bounds",
            Error::InvalidCount => "invalid-count",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::GridMismatch => "grid-mismatch",
            Error::NonpositiveDensity { .. } => "nonpositive-density",
            Error::NonFinite { .. } => "non-finite",
            Error::AllBelowFloor { .. } => "all-below-floor",
            Error::DegenerateEnergy { .. } => "degenerate-energy",
            Error::TargetOutOfRange { .. } => "target-out-of-range",
            Error::InfeasibleConstraints(_) => "infeasible-constraints",
            Error::SingularHessian => "singular-hessian",
            Error::StepInstability { .. } => "step-instability",
            Error::ProjectionInfeasible => "projection-infeasible",
            Error::ConstraintViolation(_) => "constraint-violation",
            Error::ZeroField => "zero-field",
            Error::InvalidExponent(_) => "invalid-exponent",
            Error::InvalidParams(_) => "invalid-params",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
