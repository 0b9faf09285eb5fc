use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("fields live on different grids")]
    SpecMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("nonpositive diffusion coefficient {value} at node {node}")]
    NonPositiveCoefficient { node: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("assumption {0}")]
    Validation(String),
    #[error("no finite Lipschitz constant for 1/sqrt(g) on [-{range}, {range}]")]
    NotLipschitz { range: f64 },
    #[error("linear solver stopped after {iterations} iterations (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },
    #[error("Picard iteration did not converge after {iterations} sweeps (change {change:e})")]
    Picard { iterations: usize, change: f64 },
    #[error("step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("time derivative missing for test pair")]
    MissingDerivative,
    #[error("test pair has {pair} samples, trajectory has {trajectory}")]
    SampleMismatch { pair: usize, trajectory: usize },
    #[error("empty gamma grid")]
    EmptyGammaGrid,
    #[error("insufficient levels: need at least {needed}, got {got}")]
    InsufficientLevels { needed: usize, got: usize },
}

impl Error {
    /// True for failures of the iterative machinery (Picard, linear solver).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::LinearSolver { .. } | Error::Picard { .. } => true,
            Error::StepFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
