use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: field lives in d = {field}, operator asked for d = {requested}")]
    DimensionMismatch { field: usize, requested: usize },

    #[error("field length {len} does not match grid size {expected}")]
    LengthMismatch { len: usize, expected: usize },

    #[error("operation requires a {expected} grid")]
    WrongGridKind { expected: &'static str },

    #[error("periodic field has nonzero mean {mean:e}; the Laplacian is not invertible on it")]
    NonzeroMean { mean: f64 },

    #[error("Sobolev order {0} is below the supported minimum of -2")]
    SobolevOrder(f64),

    #[error("zero wavenumber encountered with the unregularized propagator")]
    ZeroWavenumber,

    #[error("index k must be at least 1")]
    ZeroModeIndex,

    #[error("singular N(0)-P(0) relation: 9 p0^2 = 14 (p0 = {0})")]
    SingularRelation(f64),

    #[error("p0 = {p0} is resonant with alpha_{index} = {alpha}")]
    Resonance { p0: f64, index: usize, alpha: f64 },

    #[error("ODE step size underflow at eta = {eta:e} (h = {step:e})")]
    StepUnderflow { eta: f64, step: f64 },

    #[error("no decaying solution bracketed in ({lo}, {hi})")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("Newton iteration diverged at a = {a}; largest converged a = {reached}")]
    NewtonDivergence { a: f64, reached: f64 },

    #[error("continuation target a = {target} not reached; largest converged a = {reached}")]
    ContinuationStalled { target: f64, reached: f64 },

    #[error("t = {t} is not before the singular time t* = {t_star}")]
    PastSingularTime { t: f64, t_star: f64 },

    #[error("non-finite field values after the step ending at t = {t}")]
    NonFinite { t: f64 },

    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("not enough samples: need {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("vanishing denominator")]
    VanishingDenominator,

    #[error("wavevector must be nonzero")]
    ZeroWavevector,

    #[error("{0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),

    #[error("no blowup detected in the series")]
    NoBlowup,

    #[error("missing series column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
