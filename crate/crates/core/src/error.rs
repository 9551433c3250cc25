use thiserror::Error;

/// Errors raised by the sampling, reconstruction and prediction pipeline.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid B-spline order {0}: order must be at least 1")]
    InvalidOrder(usize),

    #[error("derivative order {requested} exceeds generator regularity {available}")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("cascade iteration did not converge: successive difference {residual:e} exceeds {tolerance:e}")]
    CascadeDiverged { residual: f64, tolerance: f64 },

    #[error("invalid filter taps: {0}")]
    InvalidFilter(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid sampling scheme: {0}")]
    InvalidScheme(String),

    #[error("singular polyphase matrix at x = {x} (|det| = {det:e})")]
    SingularPolyphase { x: f64, det: f64 },

    #[error("Fourier coefficient {index} of the inverse polyphase matrix has norm {norm:e}; kernels are not compactly supported")]
    CoefficientSupport { index: i64, norm: f64 },

    #[error("inverse polyphase coefficients violate the zero-row structure: {0}")]
    KernelStructure(String),

    #[error("kernel index (n = {n}, i = {i}) out of range for L = {len}, r = {r}")]
    KernelIndex { n: usize, i: usize, len: usize, r: usize },

    #[error("missing sample f^({i})(x_{n} + rho*{l})")]
    MissingSample { n: usize, i: usize, l: i64 },

    #[error("invalid shifts: {0}")]
    InvalidShifts(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
