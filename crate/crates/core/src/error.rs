use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable `{name}` at offset {offset} is outside dimension {dim}")]
    VariableOutOfRange {
        name: String,
        offset: usize,
        dim: usize,
    },

    #[error("exponent at offset {offset} must be a real, variable-free expression")]
    NonRealExponent { offset: usize },

    #[error("derivative order {order} exceeds the cap of {cap}")]
    OrderCapExceeded { order: usize, cap: usize },

    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),

    #[error("evaluation outside the principal-branch domain: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("logarithm of zero")]
    LogOfZero,

    #[error("kernel value {value} on the diagonal is not a positive real")]
    NonPositiveMetric { value: String },

    #[error("finite-difference stencil leaves the domain within 4h of the point")]
    InsufficientMargin,

    #[error("expression depends on antiholomorphic variables")]
    NotHolomorphic,

    #[error("transverse curvature {0} is not positive")]
    VanishingTransverseCurvature(f64),

    #[error("no tangential directions in dimension 1")]
    NoTangentialDirections,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("degree {requested} exceeds the supported maximum {limit}")]
    DegreeOverflow { requested: usize, limit: usize },

    #[error("point {0} lies outside the unit disc")]
    OutsideDisc(String),

    #[error("kernel file: {0}")]
    KernelFile(String),

    #[error("sample {index}: {source}")]
    AtSample { index: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
