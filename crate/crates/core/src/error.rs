//! Crate-wide error type.

use thiserror::Error;

/// Failure modes surfaced by construction and computation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}: need a prime or a power of two in 2..=16")]
    UnsupportedDimension(usize),

    #[error("state vector is not normalized (deviation {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("density matrix violates {what} (deviation {deviation:.3e})")]
    InvalidDensity { what: &'static str, deviation: f64 },

    #[error("channel is not trace-preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("sample size {n_total} is not divisible by {n_settings} settings")]
    IndivisibleShots { n_total: u64, n_settings: usize },

    #[error("singular protocol: row {row} has probability {lambda:.3e} but score norm {score:.3e}")]
    SingularProtocol { row: usize, lambda: f64, score: f64 },

    #[error(
        "information matrix has no zero mode: smallest eigenvalue {smallest:.3e} \
         exceeds 1e-6 of largest {largest:.3e}; spectrum {spectrum:?}"
    )]
    IncompleteSpectrum {
        smallest: f64,
        largest: f64,
        spectrum: Vec<f64>,
    },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
