//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset ingestion, model evaluation, and inference.
#[derive(Debug, Error)]
pub enum SrmError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("self-loop at line {line}: node `{label}` observed with itself")]
    SelfLoop { line: usize, label: String },

    #[error("successes exceed trials at line {line} ({successes} > {trials})")]
    SuccessesExceedTrials {
        line: usize,
        successes: u64,
        trials: u64,
    },

    #[error("zero trials at line {line}: each observation needs at least one trial")]
    ZeroTrials { line: usize },

    #[error("non-finite covariate at line {line}")]
    NonFiniteCovariate { line: usize },

    #[error("duplicate ordered pair ({ego}, {alter}) at line {line}")]
    DuplicatePair {
        line: usize,
        ego: String,
        alter: String,
    },

    #[error(
        "asymmetric covariate within dyad ({a}, {b}): {x_ab} vs {x_ba} differ by more than {tolerance}"
    )]
    AsymmetricCovariate {
        a: String,
        b: String,
        x_ab: f64,
        x_ba: f64,
        tolerance: f64,
    },

    #[error("empty dataset: no observations")]
    EmptyDataset,

    #[error("unknown node label `{0}`")]
    UnknownNode(String),

    #[error("self-pair: dyad index is undefined for ({0}, {0})")]
    SelfPair(String),

    #[error("unobserved dyad ({0}, {1})")]
    UnobservedDyad(String, String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),

    #[error("non-finite log-posterior at initialization after {0} jitter retries")]
    BadInitialization(usize),

    #[error("insufficient draws for diagnostic: {0}")]
    InsufficientDraws(String),

    #[error("posterior samples missing required column `{0}`")]
    MissingParameter(String),

    #[error("{0}")]
    InvalidInput(String),
}

impl SrmError {
    /// True for errors that indicate invalid input data rather than an
    /// internal or i/o failure. The CLI maps these to exit code 4.
    pub fn is_data_validation(&self) -> bool {
        if let SrmError::Csv(e) = self {
            return !matches!(e.kind(), csv::ErrorKind::Io(_));
        }
        matches!(
            self,
            SrmError::MalformedRow { .. }
                | SrmError::MissingColumn(_)
                | SrmError::SelfLoop { .. }
                | SrmError::SuccessesExceedTrials { .. }
                | SrmError::ZeroTrials { .. }
                | SrmError::NonFiniteCovariate { .. }
                | SrmError::DuplicatePair { .. }
                | SrmError::AsymmetricCovariate { .. }
                | SrmError::EmptyDataset
        )
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SrmError>;
