use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants are grouped by the stage that raises them; [`Error::class`] maps
/// them onto the three exit-code families used by the command line.
#[derive(Debug, Error)]
pub enum Error {
    // backends
    #[error("expected exactly one mask placeholder `{placeholder}`, found {found}")]
    MaskCount { placeholder: String, found: usize },
    #[error("backend `{backend}` failed: {message}")]
    Backend { backend: String, message: String },
    #[error("cannot decode image `{path}`: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero-norm vector in cosine similarity")]
    ZeroNorm,
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("unknown backend descriptor `{0}`")]
    UnknownBackend(String),

    // capgen
    #[error("tagger error: {0}")]
    Tagger(String),
    #[error("every perplexity scoring call failed ({0} candidates)")]
    AllCandidatesFailed(usize),

    // imgen
    #[error("difference vector norm {norm:e} is at or below the degeneracy threshold")]
    DegenerateDirection { norm: f64 },
    #[error("no image pair could be generated for `{source_id}` ({failures} failures)")]
    PairGenerationFailed { source_id: String, failures: usize },

    // dataset
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("pair linkage broken for `{pair_id}`: {message}")]
    Linkage { pair_id: String, message: String },
    #[error("annotation coverage: {missing} manifest record(s) lack annotations (first: `{first}`)")]
    Coverage { missing: usize, first: String },

    // eval
    #[error("empty gallery")]
    EmptyGallery,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("rows carry uneven rater counts: row {row} has {found}, expected {expected}")]
    UnevenRaters { row: usize, found: u64, expected: u64 },
    #[error("degenerate statistic: {0}")]
    Degenerate(&'static str),
    #[error("zero variance in `{0}`")]
    ZeroVariance(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),

    // plumbing
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure family, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Backend,
}

impl Error {
    pub fn backend(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Backend {
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn schema(line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnknownBackend(_) => ErrorClass::Usage,
            Error::Backend { .. }
            | Error::MaskCount { .. }
            | Error::Decode { .. }
            | Error::PairGenerationFailed { .. }
            | Error::AllCandidatesFailed(_) => ErrorClass::Backend,
            _ => ErrorClass::Data,
        }
    }
}
