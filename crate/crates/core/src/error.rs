use std::path::PathBuf;

/// Unified error type for every fallible operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A record in an input file could not be parsed. `line` is 1-based;
    /// 0 means the position is not line-oriented (binary archives).
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    /// Two documents share the same id.
    #[error("duplicate document id: {id}")]
    DuplicateId { id: String },

    /// A path could not be opened, read, or written.
    #[error("unreadable path {path}: {source}")]
    UnreadablePath {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// File content is not valid UTF-8.
    #[error("non-UTF-8 content in {path}")]
    NonUtf8Content { path: PathBuf },

    /// Quality thresholds violate 0 <= low <= high <= 1.
    #[error("invalid thresholds: low = {low}, high = {high}")]
    InvalidThresholds { low: f64, high: f64 },

    /// An n-gram order of zero was requested.
    #[error("n-gram order must be at least 1")]
    InvalidN,

    /// No term survived frequency filtering.
    #[error("empty vocabulary after filtering")]
    EmptyVocabulary,

    /// No documents were available where at least one is required.
    #[error("empty corpus")]
    EmptyCorpus,

    /// A computation produced NaN or infinity.
    #[error("non-finite value in {context}")]
    NonFiniteValue { context: String },

    /// Topic-term rows are unusable for the requested metric.
    #[error("degenerate topics: {message}")]
    DegenerateTopics { message: String },

    /// Two containers that must agree in shape do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// A document group selector matched nothing.
    #[error("empty document group")]
    EmptyGroup,

    /// A time series was requested over a corpus with no dated documents.
    #[error("no dated documents")]
    NoDatedDocuments,

    /// LDA configuration violates its invariants.
    #[error("invalid model configuration: {message}")]
    InvalidConfig { message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn unreadable(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::UnreadablePath {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::MalformedRecord {
            line,
            message: message.into(),
        }
    }
}
