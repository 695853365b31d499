use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max elementwise deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace deviates from one by {0:.3e}")]
    TraceDeviation(f64),
    #[error("negative eigenvalue {0:.3e}")]
    NegativeEigenvalue(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigen-solver failed to converge")]
    ConvergenceFailure,
    #[error("invalid radial distribution: {0}")]
    InvalidDistribution(String),
    #[error("transition frequency {0} lies above the grid band (max {1})")]
    FrequencyOutOfBand(f64, f64),
    #[error("no scattering amplitude for (omega={0}, k_out={1}, k_in={2})")]
    MissingAmplitude(f64, f64, f64),
    #[error("temperature must be positive (got {0})")]
    NonPositiveTemperature(f64),
    #[error("momentum grid too narrow: covers only {0:.6} of the Gaussian mass")]
    GridTooNarrow(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid control schedule: {0}")]
    InvalidSchedule(String),
    #[error("propagation failed on interval {0}: {1}")]
    StepFailure(usize, String),
    #[error("basis is not orthonormal (deviation {0:.3e})")]
    BasisNotOrthonormal(f64),
    #[error("Kraus constraint violated (deviation {0:.3e})")]
    ConstraintViolation(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("maximum iterations exceeded ({0})")]
    MaxIterationsExceeded(usize),
    #[error("scenario invalid at `{path}`: {message}")]
    ScenarioValidation { path: String, message: String },
    #[error("scenario parse error: {0}")]
    ScenarioParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Validation-type errors get CLI exit code 2, numerical failures code 3.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::ConvergenceFailure | Error::StepFailure(_, _) | Error::MaxIterationsExceeded(_)
        )
    }
}
