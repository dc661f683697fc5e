use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid order {0}: must be between 1 and {max}", max = crate::latin::MAX_ORDER)]
    InvalidOrder(usize),

    #[error("fill fraction {0} is outside [0, 1]")]
    InvalidFillFraction(f64),

    #[error("grid shape does not match order {order}: {detail}")]
    Shape { order: usize, detail: String },

    #[error("value {value} at row {row}, column {col} is out of range for order {order}")]
    ValueOutOfRange {
        row: usize,
        col: usize,
        value: usize,
        order: usize,
    },

    #[error("placement exhausted after {placed} of {target} cells")]
    PlacementExhausted { placed: usize, target: usize },

    #[error("square violates Latin constraints: {0}")]
    InvalidSquare(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("run set is empty")]
    EmptyRunSet,

    #[error("censored mass {mass} exceeds threshold {threshold}")]
    Censored { mass: f64, threshold: f64 },

    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_file(path: impl Into<String>, source: Error) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(source),
        }
    }

    /// True for I/O failures, including ones wrapped with a file name.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::InFile { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
