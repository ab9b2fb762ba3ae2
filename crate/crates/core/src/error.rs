use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pulse envelope of {envelope_ms:.4} ms exceeds the {period_ms:.4} ms stimulation period")]
    PeriodOverflow { envelope_ms: f64, period_ms: f64 },
    #[error("sample rate {rate_hz} Hz gives fewer than 2 samples per {pulse_width_ms} ms phase")]
    SampleRateTooLow { rate_hz: f64, pulse_width_ms: f64 },
    #[error("invalid modulation schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("quiet period {0} s is shorter than the 0.4 s baseline window")]
    InvalidQuietPeriod(f64),
    #[error("invalid muscle parameters: {0}")]
    InvalidParams(String),
    #[error("trace has {len} samples, at least {needed} required")]
    TraceTooShort { len: usize, needed: usize },
    #[error("category {value:?} of feature {feature} was not seen when fitting")]
    UnknownCategory { feature: String, value: String },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    InvalidFractions(Vec<f64>),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("true values are constant; R² is undefined")]
    ConstantTruth,
    #[error("invalid fold count {folds} for {rows} rows")]
    InvalidFolds { folds: usize, rows: usize },
    #[error("n_iter {n_iter} exceeds the {grid} grid combinations")]
    NIterExceedsGrid { n_iter: usize, grid: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("incompatible artifact: {0}")]
    IncompatibleArtifact(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, printed by the command line tool.
    pub fn category(&self) -> &'static str {
        match self {
            Error::PeriodOverflow { .. } => "period-overflow",
            Error::SampleRateTooLow { .. } => "sample-rate-too-low",
            Error::InvalidSchedule(_) => "invalid-schedule",
            Error::InvalidProtocol(_) => "invalid-protocol",
            Error::InvalidQuietPeriod(_) => "invalid-quiet-period",
            Error::InvalidParams(_) => "invalid-params",
            Error::TraceTooShort { .. } => "trace-too-short",
            Error::UnknownCategory { .. } => "unknown-category",
            Error::EmptyInput(_) => "empty-input",
            Error::InvalidFractions(_) => "invalid-fractions",
            Error::WidthMismatch { .. } => "width-mismatch",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::ConstantTruth => "constant-truth",
            Error::InvalidFolds { .. } => "invalid-folds",
            Error::NIterExceedsGrid { .. } => "n-iter-exceeds-grid",
            Error::InvalidConfig(_) => "invalid-config",
            Error::IncompatibleArtifact(_) => "incompatible-artifact",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
