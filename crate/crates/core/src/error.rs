use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or configuration.
    Config,
    /// Malformed or unsuitable input data.
    Data,
    /// A numerical procedure broke down.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot parse {token:?} at row {row}, column {col}")]
    Parse { row: usize, col: usize, token: String },
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("dataset has no {0}")]
    Empty(&'static str),
    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, found {found_rows}x{found_cols}")]
    Shape {
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("feature {feature} ({name}) has {observed} observed cells, need at least {required}")]
    TooFewObserved {
        feature: usize,
        name: String,
        observed: usize,
        required: usize,
    },
    #[error("dataset must be fully observed; {missing} cells are missing")]
    NotComplete { missing: usize },
    #[error("external imputation contains {missing} missing cells")]
    ExternalMissing { missing: usize },
    #[error("image shape {height}x{width} does not match {features} features")]
    ImageShape { height: usize, width: usize, features: usize },
    #[error("dataset has no image shape")]
    NoImageShape,
    #[error("cannot mask {requested} cells while keeping 2 observed cells per feature (at most {max} allowed)")]
    FloorUnsatisfiable { requested: usize, max: usize },
    #[error("observed covariance block of row {row} is singular")]
    Singular { row: usize },
    #[error("singular value decomposition failed")]
    Svd,
    #[error("no cells are defined in both correlation matrices")]
    NoValidCells,
    #[error("NaN in input")]
    NanInput,
    #[error("all polynomial coefficients are zero")]
    ZeroPolynomial,
    #[error("method {method} has no result at rate {rate}")]
    MissingRate { method: String, rate: f64 },
    #[error("figure panels have mixed dimensions ({expected} vs {found})")]
    MixedDimensions { expected: usize, found: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::MissingRate { .. } => ErrorKind::Config,
            Error::Singular { .. } | Error::Svd | Error::ZeroPolynomial => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
