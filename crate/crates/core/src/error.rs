use thiserror::Error;

/// Errors raised by the numerical kernels and the run pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative order {sigma} applied to a profile with nonzero mean (|c0| = {mean:e})")]
    NegativeOrderOnNonzeroMean { sigma: f64, mean: f64 },

    #[error("profile has a nonzero zero mode (|c0| = {0:e}); the squared distance is infinite")]
    ZeroModeNonzero(f64),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("slope gate violated: sup|h_x| = {slope} > {gate}")]
    SlopeGateViolation { slope: f64, gate: f64 },

    #[error("slope blow-up at t = {t}: sup|h_x| = {slope} > {gate}")]
    SlopeBlowup { t: f64, slope: f64, gate: f64 },

    #[error("elliptic solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDivergence { residual: f64, iterations: usize },

    #[error("dissipation cross-check failed: volume {volume:e} vs boundary {boundary:e}")]
    CrossCheckFailure { volume: f64, boundary: f64 },

    #[error("insufficient samples for {check}: {got} usable, need {need}")]
    InsufficientSamples { check: &'static str, got: usize, need: usize },

    #[error("Lyapunov regime never entered: min E^2 D = {min:e} > {epsilon:e}")]
    RegimeNeverEntered { min: f64, epsilon: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
