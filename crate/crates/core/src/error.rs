use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel matrix is empty")]
    EmptyMatrix,
    #[error("row {row} of the transition matrix sums to {sum}")]
    NonStochastic { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is not a probability")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("Blahut-Arimoto did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("index {index} out of range for an alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Markov chain has no stationary distribution within tolerance")]
    NonStationaryMarkov,
    #[error("operation requires a non-degenerate channel")]
    DegenerateChannel,
    #[error("operation requires a degenerate channel")]
    NotDegenerate,
    #[error("operation requires a symmetric binary-input channel")]
    NotSymmetricBinary,
    #[error("{len} symbols over an alphabet of {q} exceed the index space")]
    LengthOverflow { len: usize, q: usize },
    #[error("partition does not cover the domain exactly once")]
    IncompletePartition,
    #[error("channel output {y} has zero probability under the current beliefs")]
    ZeroEvidence { y: usize },
    #[error("randomization mass imbalance: excess {excess} vs deficit {deficit}")]
    MassImbalance { excess: f64, deficit: f64 },
    #[error("horizon of {cap} channel uses exceeded before stopping")]
    HorizonExceeded { cap: u64 },
    #[error("decode request for k={k} at t={t} precedes arrival time {t_k}")]
    RequestBeforeArrival { k: usize, t: u64, t_k: u64 },
    #[error("MaxEJS search space of {size} maps exceeds the cap {cap}")]
    SearchSpaceTooLarge { size: f64, cap: u64 },
    #[error("type-based engine requires equiprobable source symbols")]
    NotEquiprobable,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("not enough points with error events to fit a slope")]
    InsufficientErrorEvents,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
