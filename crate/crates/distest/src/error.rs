//! Error type shared across the crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Wavelet index outside the stored ladder.
    #[error("index out of range: level {j}, position {k}")]
    IndexOutOfRange { j: usize, k: usize },

    /// Flat index outside the stored ladder (valid range is 1..=2^(j_max+1)).
    #[error("flat index {t} out of range (max {max})")]
    FlatIndexOutOfRange { t: usize, max: usize },

    /// A coefficient or derived quantity is NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Two coefficient sequences have different ladder depths.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A machine attempted to transmit past its hard bit cap. This signals a
    /// protocol bug, not a recoverable condition.
    #[error("budget exceeded on machine {machine}: {attempted} bits > cap {cap}")]
    BudgetExceeded {
        machine: usize,
        attempted: u64,
        cap: f64,
    },

    /// The budget cannot fit even a single quantized message.
    #[error("insufficient budget: {budget} bits < one message of {need} bits")]
    InsufficientBudget { budget: f64, need: f64 },

    /// Fixed-point or search iteration failed to converge.
    #[error("no convergence in {0}")]
    NoConvergence(String),

    /// A rate fit needs at least three grid points.
    #[error("not enough grid points for a rate fit: {0} < 3")]
    NotEnoughPoints(usize),

    /// Malformed serialized input (coefficient files, experiment configs).
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("TOML error: {0}")]
    Toml(#[from] toml::de::Error),
}
