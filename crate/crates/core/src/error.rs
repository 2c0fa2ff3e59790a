use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum VortexError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("r = {r} lies outside the tabulated range [{lo}, {hi}]")]
    Extrapolation { r: f64, lo: f64, hi: f64 },
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("kernel integrity violation: {0}")]
    Integrity(String),
    #[error("sign violation: {0}")]
    SignViolation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate mode: {0}")]
    DegenerateMode(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Convergence,
    Integrity,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Convergence => 4,
            ErrorClass::Integrity => 5,
        }
    }
}

impl VortexError {
    pub fn class(&self) -> ErrorClass {
        use VortexError::*;
        match self {
            Config(_) => ErrorClass::Config,
            Data(_) | Resolution(_) | GridMismatch(_) | Domain(_) | Extrapolation { .. } | Precondition(_)
            | Io { .. } => ErrorClass::Data,
            Convergence(_) | LinearAlgebra(_) => ErrorClass::Convergence,
            Integrity(_) | SignViolation(_) | DegenerateMode(_) => ErrorClass::Integrity,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        VortexError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, VortexError>;
