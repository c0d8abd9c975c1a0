use thiserror::Error;

pub type Result<T, E = LfcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LfcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator list is empty")]
    EmptyGeneratorList,

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// The product of the surface row and the input vector vanishes.
    #[error("singular sliding surface: theta·B0 = {0}")]
    SingularSurface(f64),

    #[error("simulation diverged at t = {time} s (area {area}, state index {index}, value {value})")]
    Diverged {
        time: f64,
        area: usize,
        index: usize,
        value: f64,
    },

    #[error("non-finite derivative at t = {time} s (flat state index {index})")]
    NonFiniteDerivative { time: f64, index: usize },

    #[error("config error at line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("trace is empty")]
    EmptyTrace,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LfcError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        LfcError::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        LfcError::InvalidConfig(msg.into())
    }
}
