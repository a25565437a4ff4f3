use thiserror::Error;

/// Errors produced while ingesting data, training, or building/solving MILPs.
#[derive(Debug, Error)]
pub enum ParcError {
    #[error("unknown category {value:?} in column {column:?}")]
    UnknownCategory { column: String, value: String },

    #[error("non-numeric value {value:?} in numeric column {column:?} (row {row})")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("missing value in column {column:?} (row {row})")]
    MissingValue { column: String, row: usize },

    #[error("column {0:?} not found")]
    UnknownColumn(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("cannot form {k} clusters from {n} samples")]
    TooFewSamples { k: usize, n: usize },

    #[error("every cluster was discarded as too small")]
    AllClustersDiscarded,

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("LP format error at line {line}: {msg}")]
    LpFormat { line: usize, msg: String },

    #[error("unsupported model format version {0}")]
    FormatVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl ParcError {
    /// Short stable identifier, used by the CLI's machine-parsable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            ParcError::UnknownCategory { .. } => "unknown_category",
            ParcError::NonNumeric { .. } => "non_numeric",
            ParcError::MissingValue { .. } => "missing_value",
            ParcError::UnknownColumn(_) => "unknown_column",
            ParcError::InvalidArgument(_) => "invalid_argument",
            ParcError::Dimension(_) => "dimension",
            ParcError::NonFinite(_) => "non_finite",
            ParcError::TooFewSamples { .. } => "too_few_samples",
            ParcError::AllClustersDiscarded => "all_clusters_discarded",
            ParcError::Numerical(_) => "numerical",
            ParcError::LpFormat { .. } => "lp_format",
            ParcError::FormatVersion(_) => "format_version",
            ParcError::Io(_) => "io",
            ParcError::Csv(_) => "csv",
            ParcError::Json(_) => "json",
            ParcError::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, ParcError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ParcError::InvalidArgument(msg.into()))
}
