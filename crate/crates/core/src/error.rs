use thiserror::Error;

/// Errors produced by the detection pipeline and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("rank-deficient matrix: |r[{index}][{index}]| = {value:e} below threshold")]
    RankDeficient { index: usize, value: f64 },

    #[error("unsupported constellation order {0}; expected 16, 64, 256 or 1024")]
    UnsupportedOrder(usize),

    #[error("bit frame length {len} is not {expected}")]
    FrameLength { len: usize, expected: usize },

    #[error("value {value} at position {index} is not a lattice point")]
    OffLattice { index: usize, value: f64 },

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("invalid noise variance {0}")]
    InvalidNoise(f64),

    #[error("ML budget exceeded: {order}^{n_t} candidates exceeds budget {budget}")]
    BudgetExceeded { order: usize, n_t: usize, budget: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
