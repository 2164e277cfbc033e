use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} at blog {blog}, period {period} is outside [0, 1]")]
    OutOfRangeValue { blog: usize, period: usize, value: f64 },

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("a panel needs at least 2 periods, got {0}")]
    TooFewPeriods(usize),

    #[error("a panel needs at least 1 blog")]
    NoBlogs,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parameter `{0}` is not active for this model family")]
    InactiveParameter(&'static str),

    #[error("parameter `{0}` is required for this model family")]
    MissingParameter(&'static str),

    #[error("empty comment set")]
    EmptyCommentSet,

    #[error("empty post set")]
    EmptyPostSet,

    #[error("invalid engagement record: {0}")]
    InvalidRecord(String),

    #[error("no records for blog {blog} in period {period}")]
    MissingCell { blog: String, period: usize },

    #[error("history too short: lag {lag} needs {needed} stored vectors, found {found}")]
    InsufficientHistory { lag: usize, needed: usize, found: usize },

    #[error("forecast needs period {needed}, which predates period 1")]
    HorizonBeyondSupport { needed: i64 },

    #[error("invalid train/test split: {0}")]
    InvalidSplit(String),

    #[error("parameter `{name}` lies within {margin} of its constraint boundary")]
    OnBoundary { name: String, margin: f64 },

    #[error("degenerate opinion range at period {period} (all prior opinions equal)")]
    DegenerateRange { period: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
