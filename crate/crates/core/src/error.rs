use thiserror::Error;

/// Errors raised by the algebraic and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unimodular (determinant {det})")]
    NotUnimodular { det: String },

    #[error("matrix is not hyperbolic")]
    NotHyperbolic,

    #[error("singular system: right-hand side is outside the range")]
    SingularMatrix,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("modulus must be positive")]
    ZeroModulus,

    #[error("invalid automorphism data: {0}")]
    InvalidAutomorphism(String),

    #[error("iterate normal form not found up to n = {bound}")]
    NotFound { bound: u64 },

    #[error("wrong leaf kind: expected {expected}, got {got}")]
    WrongLeafKind { expected: &'static str, got: &'static str },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("cone field is not invariant at grid point {0}")]
    ConeNotInvariant(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("k must be even, got {0}")]
    OddLevel(u64),

    #[error("center is not preserved by the automorphism")]
    CenterNotPreserved,

    #[error("orbit diverged at step {step} (height {height})")]
    DivergentOrbit { step: usize, height: f64 },

    #[error("graph transform is not contracting at iteration {iteration} (growth {growth:.3})")]
    NoContraction { iteration: usize, growth: f64 },

    #[error("curve too short: length {length:.6} does not exceed window {needed:.6}")]
    CurveTooShort { length: f64, needed: f64 },

    #[error("leaf following failed at parameter {last:.6}")]
    LeafFollowing { last: f64 },

    #[error("induced homology action {found:?} differs from A = {expected:?}")]
    HomologyMismatch {
        expected: [[i64; 2]; 2],
        found: [[i64; 2]; 2],
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name used by the CLI error objects.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotUnimodular { .. } => "NotUnimodular",
            Error::NotHyperbolic => "NotHyperbolic",
            Error::SingularMatrix => "SingularMatrix",
            Error::Dimension { .. } => "Dimension",
            Error::ZeroModulus => "ZeroModulus",
            Error::InvalidAutomorphism(_) => "InvalidAutomorphism",
            Error::NotFound { .. } => "NotFound",
            Error::WrongLeafKind { .. } => "WrongLeafKind",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::EmptySample => "EmptySample",
            Error::ConeNotInvariant(_) => "ConeNotInvariant",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::OddLevel(_) => "OddLevel",
            Error::CenterNotPreserved => "CenterNotPreserved",
            Error::DivergentOrbit { .. } => "DivergentOrbit",
            Error::NoContraction { .. } => "NoContraction",
            Error::CurveTooShort { .. } => "CurveTooShort",
            Error::LeafFollowing { .. } => "LeafFollowing",
            Error::HomologyMismatch { .. } => "HomologyMismatch",
            Error::NotConverged { .. } => "NotConverged",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }

    /// Input validation failures, as opposed to failures of a computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotUnimodular { .. }
                | Error::NotHyperbolic
                | Error::Dimension { .. }
                | Error::ZeroModulus
                | Error::InvalidAutomorphism(_)
                | Error::WrongLeafKind { .. }
                | Error::TooFewPoints { .. }
                | Error::EmptySample
                | Error::InvalidParameter(_)
                | Error::OddLevel(_)
                | Error::Parse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
