use std::path::PathBuf;

use thiserror::Error;

use crate::datamodel::SentimentLabel;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error("unsupported {what} version {found} (expected {expected})")]
    UnsupportedVersion {
        what: &'static str,
        found: u64,
        expected: u64,
    },

    #[error("duplicate image id `{0}`")]
    DuplicateImage(String),
    #[error("duplicate event id `{0}`")]
    DuplicateEvent(String),
    #[error("duplicate stream id `{0}`")]
    DuplicateStream(String),
    #[error("event `{event}` references unknown image `{image}`")]
    UnknownImage { event: String, image: String },
    #[error("event `{event}` references unknown stream `{stream}`")]
    UnknownStream { event: String, stream: String },
    #[error("event `{0}` has no images")]
    EmptyEvent(String),
    #[error("non-contiguous events: {0}")]
    NonContiguous(String),
    #[error("image `{image}` belongs to both event `{first}` and event `{second}`")]
    OverlappingEvents {
        image: String,
        first: String,
        second: String,
    },
    #[error("timestamps decrease in stream `{stream}` at image `{image}`")]
    NonMonotonicTimestamp { stream: String, image: String },
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("bad feature file magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("feature row count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("truncated feature payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("sha256 mismatch for {}: manifest pins {expected}, file has {found}", path.display())]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("ANP catalog must have {expected} entries, found {found}")]
    BadCatalogSize { expected: usize, found: usize },
    #[error("ANP `{name}` has sentiment value {value} outside [-2, 2]")]
    SentimentOutOfRange { name: String, value: f64 },
    #[error("ANP `{0}` has a zero sentiment value")]
    ZeroSentiment(String),
    #[error("duplicate ANP name `{0}`")]
    DuplicateAnp(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("ANP likelihood {value} at index {index} outside [0, 1]")]
    LikelihoodOutOfRange { index: usize, value: f64 },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot segment an empty stream")]
    EmptyStream,
    #[error("manifest carries no event boundaries")]
    NoBoundaries,

    #[error("binary problem needs samples of both signs")]
    SingleClass,
    #[error("class {label} absent from training data{}", fold.map(|f| format!(" (fold {f})")).unwrap_or_default())]
    MissingClass {
        label: SentimentLabel,
        fold: Option<usize>,
    },
    #[error("no labeled events")]
    NoLabels,
    #[error("fold count must be at least 2, got {0}")]
    BadFoldCount(usize),
    #[error("unsatisfiable synthetic config: {0}")]
    Unsatisfiable(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }
}
