use thiserror::Error;

#[derive(Debug, Error)]
pub enum PramError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("singular matrix: condition number {condition:.3e}")]
    SingularMatrix { condition: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot parse {value:?} at row {row}, column {column:?} as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing column {0:?}")]
    MissingColumn(String),
}

impl PramError {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            PramError::InvalidArgument(_) => "invalid_argument",
            PramError::DimensionMismatch { .. } => "dimension_mismatch",
            PramError::Divergence { .. } => "divergence",
            PramError::SingularMatrix { .. } => "singular_matrix",
            PramError::Io { .. } => "io",
            PramError::Csv(_) => "csv",
            PramError::Parse { .. } => "parse",
            PramError::MissingColumn(_) => "missing_column",
        }
    }
}

pub type Result<T> = std::result::Result<T, PramError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(PramError::InvalidArgument(msg.into()))
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(PramError::DimensionMismatch { expected, found })
    }
}
