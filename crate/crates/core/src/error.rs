use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building bases, fitting, or decomposing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("knot vector needs at least {required} knots, got {got}")]
    TooFewKnots { required: usize, got: usize },

    #[error("knots must be strictly increasing and finite (violated at index {index})")]
    NonIncreasingKnots { index: usize },

    #[error("time {t} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("basis index {index} out of range (basis has {n} functions)")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("derivative order {0} not supported")]
    UnsupportedDerivative(usize),

    #[error("spline order {order} is too low; at least {required} is needed")]
    InsufficientOrder { order: usize, required: usize },

    #[error("splines are bound to different basis environments")]
    MismatchedEnv,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not supported: {0}")]
    Unsupported(String),

    #[error("invalid sample series: {0}")]
    InvalidSeries(String),

    #[error("least-squares fit failed: system is rank deficient at column {column}")]
    FitFailed { column: usize },

    #[error("no tangent points found")]
    EmptyTangentSet,

    #[error("envelope estimation needs at least 2 tangent points, found {found}")]
    EnvelopeFailure { found: usize },

    #[error("frequency system is rank deficient at column {column}; input is not a unit-amplitude oscillation on this grid")]
    DegenerateOmega { column: usize },

    #[error("inverse squared frequency is nonpositive on {fraction:.2}% of the grid")]
    NonpositiveOmega { fraction: f64 },

    #[error("amplitude is too close to zero at t = {t}")]
    AmplitudeNearZero { t: f64 },

    #[error("frequency is too close to zero at t = {t}")]
    FrequencyNearZero { t: f64 },

    #[error("frequency is nonpositive at t = {t}")]
    NonpositiveFrequency { t: f64 },

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
