use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical core, the scenario runner and the IO layer.
///
/// Values are carried as `f64` regardless of the scalar type of the failing computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("opinion index |s| = {s} exceeds the cap {cap}")]
    OpinionOverflow { s: f64, cap: f64 },

    #[error("step size fell below dt_min = {dt_min} at t = {t} without meeting rel_tol")]
    StepUnderflow { t: f64, dt_min: f64 },

    #[error("state left the admissible region at t = {t}: {detail}")]
    InvariantBreach { t: f64, detail: String },

    #[error("fixed-point search did not converge: {0}")]
    NoConvergence(String),

    #[error("unsupported dimensionality: {0}")]
    WrongDims(String),

    #[error("characteristic polynomial roots did not converge after {iterations} iterations")]
    NoRootConvergence { iterations: usize },

    #[error("Routh-Hurwitz verdict disagrees with eigenvalue verdict: {0}")]
    VerdictMismatch(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trajectory has no records")]
    EmptyTrajectory,

    #[error("sweep has {cells} cells, above the cap of {cap}")]
    SweepTooLarge { cells: usize, cap: usize },

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable variant name, used on the diagnostic stream and in sweep tables.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OpinionOverflow { .. } => "OpinionOverflow",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::InvariantBreach { .. } => "InvariantBreach",
            Error::NoConvergence(_) => "NoConvergence",
            Error::WrongDims(_) => "WrongDims",
            Error::NoRootConvergence { .. } => "NoRootConvergence",
            Error::VerdictMismatch(_) => "VerdictMismatch",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyTrajectory => "EmptyTrajectory",
            Error::SweepTooLarge { .. } => "SweepTooLarge",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }

    /// True for failures caused by the user's input rather than the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::UnknownPreset(_)
                | Error::InvalidParams(_)
                | Error::InvalidConfig(_)
                | Error::Io(_)
                | Error::Parse(_)
                | Error::SweepTooLarge { .. }
                | Error::WrongDims(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
