use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("jet order mismatch: {0}")]
    OrderMismatch(String),

    #[error("jet order {available} exhausted; level {level} requires order {required}")]
    JetOrderExhausted {
        level: usize,
        required: usize,
        available: usize,
    },

    #[error("non-finite integrand sample at node {location:?}")]
    NonFinite { location: Vec<f64> },

    #[error("point {coords:?} lies outside the domain of chart {chart}")]
    OutsideChart { chart: usize, coords: Vec<f64> },

    #[error("{scenario} degree {degree}: no chart symbol implemented, use the spectral oracle")]
    SpectralOracleOnly { scenario: String, degree: usize },

    #[error("group element {angles:?} is not transversal: it fixes {fixed_set}")]
    NonTransversal { angles: Vec<f64>, fixed_set: String },

    #[error("point at distance {distance:e} from the singular stratum is inside the margin {margin:e}")]
    TooCloseToSingular { distance: f64, margin: f64 },

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("exact constant-term mode needs n - kappa = 0 (have {codim}); use extraction mode")]
    ExactModeUnavailable { codim: usize },

    #[error("collar integral diverges under refinement: successive values {values:?}")]
    CollarDivergence { values: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
