use thiserror::Error;

#[derive(Debug, Error)]
pub enum NflError {
    #[error("grid too coarse: dx={dx} exceeds {limit}")]
    GridTooCoarse { dx: f64, limit: f64 },
    #[error("quadrature did not converge: refinements differ by {diff:e}")]
    QuadratureNonconvergence { diff: f64 },
    #[error("state {u} outside [0,1] beyond overshoot tolerance")]
    StateOutOfRange { u: f64 },
    #[error("overshoot {overshoot:e} exceeded tolerance at index {index}; reduce dt")]
    OvershootExceeded { overshoot: f64, index: usize },
    #[error("inputs not ordered: u0 - v0 = {excess:e} at index {index}")]
    InputsNotOrdered { excess: f64, index: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("level {level} not bracketed by tails ({u_left}, {u_right})")]
    LevelNotBracketed { level: f64, u_left: f64, u_right: f64 },
    #[error("invalid band [{lo}, {hi}]")]
    InvalidBand { lo: f64, hi: f64 },
    #[error("front not advancing: fitted c1 = {c1}")]
    NonpositiveC1 { c1: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("tail decays at rate {measured}, expected {expected}")]
    DecayMismatch { measured: f64, expected: f64 },
    #[error("trace violates propagation bounds at pair ({t0}, {t1})")]
    BoundsCertificateMissing { t0: f64, t1: f64 },
    #[error("blend slope below c1/2 after {halvings} halvings")]
    BlendSlopeViolation { halvings: usize },
    #[error("step {eta} is not a positive multiple of dx={dx}")]
    StepNotMultipleOfGrid { eta: f64, dx: f64 },
    #[error("horizon too short: probe x={x} never leaves the middle region")]
    HorizonTooShort { x: f64 },
    #[error("insufficient history: need {needed} time units before t={t}, have {available}")]
    InsufficientHistory { t: f64, needed: f64, available: f64 },
    #[error("window [{lo}, {hi}] exceeds grid")]
    WindowExceedsGrid { lo: f64, hi: f64 },
    #[error("profile slope degenerate: sup phi' = {sup_slope:e} on middle window")]
    ProfileSlopeDegenerate { sup_slope: f64 },
    #[error("epsilon {eps} exceeds cap {cap}")]
    EpsilonExceedsCap { eps: f64, cap: f64 },
    #[error("initial data not sandwiched: {0}")]
    InitialSandwichViolated(String),
    #[error("config invalid at `{path}`: {reason}")]
    ConfigInvalid { path: String, reason: String },
    #[error("experiment failed: {0}")]
    ExperimentFailed(String),
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
    #[error("config drift: stored config hash {stored} differs from run hash {recorded}")]
    ConfigDrift { stored: String, recorded: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NflError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> NflError {
    NflError::InvalidParameter { name, reason: reason.into() }
}
