use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mechanical parameters: {0}")]
    InvalidParams(String),
    #[error("configuration is not an equilibrium (|g(q)| = {residual:e})")]
    NotAnEquilibrium { residual: f64 },
    #[error("Jacobi metric degenerate at q = ({q1}, {q2}): E - U = {margin:e}")]
    DegenerateMetric { q1: f64, q2: f64, margin: f64 },
    #[error("insufficient energy: E - U(q) = {margin:e}")]
    InsufficientEnergy { margin: f64 },
    #[error("zero tangent vector")]
    ZeroTangent,
    #[error("string needs at least {min} vertices, got {got}")]
    TooFewVertices { got: usize, min: usize },
    #[error("winding class (0,0) requires an explicit seed loop")]
    NullClassWithoutSeed,
    #[error("invalid string: {0}")]
    InvalidString(String),
    #[error("time step {dt:e} exceeds explicit stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("closed string collapsed (length {length:e} after {iterations} iterations)")]
    CollapseDetected { length: f64, iterations: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("string is not closed")]
    NotClosed,
    #[error("non-integer winding ({w1}, {w2})")]
    NonIntegerWinding { w1: f64, w2: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("energy {energy} outside admissible range ({lo}, {hi})")]
    EnergyOutOfRange { energy: f64, lo: f64, hi: f64 },
    #[error("seed too slow (min speed {min_speed:e} <= brake threshold {threshold:e})")]
    DegenerateSeed { min_speed: f64, threshold: f64 },
    #[error("period collapsed to {period:e}")]
    PeriodCollapse { period: f64 },
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("continuation step failed at E = {energy} after {halvings} halvings: {reason}")]
    StepFailure { energy: f64, halvings: usize, reason: String },
    #[error("orbit is unclassifiable: {0}")]
    Unclassifiable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
