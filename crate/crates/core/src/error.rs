use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exchange between a spin and itself ({0})")]
    SameSpin(String),
    #[error("pair {pair} is not tunable in configuration {configuration}")]
    IllegalPair { pair: String, configuration: String },
    #[error("pair {0} appears twice in one step")]
    RepeatedPair(String),
    #[error("step {0} has no pulses")]
    EmptyStep(usize),
    #[error("invalid duration {0}")]
    InvalidDuration(f64),
    #[error("pulse strength {0} outside [0, 1]")]
    InvalidStrength(f64),
    #[error("fixed-coupling fraction {0} outside (0, 1]")]
    InvalidFixedFraction(f64),
    #[error("wrapper sequence contains inter-qubit pair {0}")]
    InterQubitWrapper(String),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not unitary (||U'U - I|| = {0:e})")]
    NotUnitary(f64),
    #[error("energy difference {name} = {value} is not positive")]
    NonPositiveGap { name: String, value: f64 },
    #[error("on-site Coulomb energy for {0} must be positive")]
    NonPositiveOnSite(String),
    #[error("parameter {0} is not finite")]
    NonFinite(String),
    #[error("Hamiltonian assembly is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("invalid value: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
