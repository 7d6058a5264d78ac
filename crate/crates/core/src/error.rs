use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("XᵀX + λI is numerically singular (pivot {pivot_index}); use a positive ridge strength")]
    SingularMatrix { pivot_index: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: String, hi: String },

    #[error("perturbation interval {index} does not contain 0")]
    IntervalExcludesZero { index: usize },

    #[error("bias cap ℓ = {l} exceeds number of labels {n}")]
    CapTooLarge { l: usize, n: usize },

    #[error("label {index} is {value}, expected 0 or 1")]
    NonBinaryLabel { index: usize, value: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(String),

    #[error("negative ridge strength {0}")]
    NegativeLambda(String),

    #[error("negative robustness radius {0}")]
    NegativeEpsilon(String),

    #[error("instance too large for exhaustive oracle: {0}")]
    InstanceTooLarge(String),

    #[error("{path}: row {row}, column `{column}`: {message}")]
    ParseError {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: non-numeric value `{value}`")]
    NonNumericValue {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid split configuration: {0}")]
    InvalidSplit(String),

    #[error("too few rows: need at least {needed}, have {have}")]
    TooFewRows { needed: usize, have: usize },

    #[error("synthetic generator supports 3, 4 or 5 features, got {0}")]
    BadFeatureCount(usize),

    #[error("minority fraction must be in (0, 0.5], got {0}")]
    BadFraction(f64),

    #[error("sample count must be even and positive for balanced classes, got {0}")]
    OddSampleCount(usize),

    #[error("empty {0} grid")]
    EmptyGrid(&'static str),

    #[error("group labels missing")]
    MissingGroups,

    #[error("no label perturbation within the bias model changes the prediction")]
    NoAttackExists,

    #[error("requested {requested} flips but only {available} labels can move the prediction")]
    InsufficientImpact { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("soundness violated: approximate certificate for point {0} disagrees with exact")]
    SoundnessViolation(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
