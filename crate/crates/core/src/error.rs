use thiserror::Error;

/// Errors raised by the scattering toolkit.
#[derive(Debug, Error)]
pub enum ScatterError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid direction set: {0}")]
    InvalidDirections(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("singular kernel evaluation at coincident points")]
    SingularEvaluation,
    #[error("resonant frequency: symbol denominator vanishes (|d| = {0:e})")]
    ResonantFrequency(f64),
    #[error("wavenumber must satisfy Im k >= 0, got {0}")]
    LowerHalfPlane(f64),
    #[error("shape mismatch: expected {expected} nodes, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("Neumann series diverged after {iterations} iterations (last term norm {last_norm:e})")]
    Divergence { iterations: usize, last_norm: f64 },
    #[error("Neumann series did not reach tol {tol:e} within {max_iter} iterations")]
    NotConverged { tol: f64, max_iter: usize },
    #[error("exponential overflow guard: eta * a = {0} exceeds 700")]
    Overflow(f64),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("no crossing: max |p~| at eta cap {cap} is {value:e}, below target {target:e}")]
    NoCrossing { cap: f64, value: f64, target: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ScatterError>;
