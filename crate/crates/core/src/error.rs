use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("day geometry mismatch: expected {expected_h}x{expected_p}, found {found_h}x{found_p}")]
    GeometryMismatch {
        expected_h: usize,
        expected_p: usize,
        found_h: usize,
        found_p: usize,
    },

    #[error("no complete day: series has {n} timesteps but a day needs {h}")]
    NoCompleteDay { n: usize, h: usize },

    #[error("infeasible k = {k}: only {days} days available")]
    InfeasibleK { k: usize, days: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("state {state} out of range for {k} states")]
    StateOutOfRange { state: usize, k: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("{0} split is empty")]
    EmptySplit(&'static str),

    #[error("no feasible k in [{min}, {max}] with {days} training days")]
    EmptyKRange { min: usize, max: usize, days: usize },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
