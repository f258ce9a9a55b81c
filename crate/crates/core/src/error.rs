//! Crate-wide error type and exit-code classification.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- configuration ---
    #[error("config error: {0}")]
    Config(String),
    #[error("failed to read config file {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse config file {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    // --- provider / gateway ---
    #[error("no template registered for role {0}")]
    UnknownRole(String),
    #[error("template placeholder {{{name}}} has no binding")]
    MissingBinding { name: String },
    #[error("malformed template: unclosed '{{' at byte {offset}")]
    TemplateSyntax { offset: usize },
    #[error("provider exhausted after {attempts} attempts: {last_error}")]
    ProviderExhausted { attempts: u32, last_error: String },
    #[error("provider returned an empty completion after retries")]
    EmptyCompletion,
    #[error("transient provider failure: {0}")]
    ProviderTransient(String),
    #[error("provider failure: {0}")]
    ProviderFatal(String),
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("embedding has zero norm and cannot be normalized")]
    ZeroNorm,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    // --- persona pool ---
    #[error("completion yielded zero candidates")]
    ParseFailure,
    #[error("requested {count} personas but the cross product only has {available} pairs")]
    CountExceedsCross { count: usize, available: usize },
    #[error("pool has {available} entries of the requested kind but few_shot_count is {needed}")]
    FewShotExceedsPool { needed: usize, available: usize },

    // --- dialogue tree ---
    #[error("turn index {index} out of range (tree has {len} turns)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },

    // --- dataset builder ---
    #[error("induction output missing Profile/Personalities labels after retry")]
    InductionParseFailure,

    // --- training export ---
    #[error("agent mix file line {line}: {reason}")]
    AgentMixParseFailure { line: usize, reason: String },
    #[error("log probability {value} is positive")]
    PositiveLogProb { value: f64 },
    #[error("sequence owned by {actual} where {expected} was required")]
    OwnerMismatch {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    // --- metrics ---
    #[error("fewer than two points to fit a regression line")]
    DegenerateAbscissa,
    #[error("case {case_id} has no score at turn {turn}")]
    MissingScore { case_id: String, turn: usize },
    #[error("rating {value} outside the 1..=5 category set")]
    RatingOutOfRange { value: i64 },

    // --- evaluation ---
    #[error("judge completion did not contain a rating in 1..=5 after retry")]
    RatingParseFailure,
    #[error("evaluated endpoint failed: {0}")]
    EndpointFailure(String),
    #[error("no completed cases to report on")]
    NoCompletedCases,

    // --- io / serialization ---
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 config, 3 provider, 4 data.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Config(_) | ConfigRead { .. } | ConfigParse { .. } => 2,
            UnknownRole(_)
            | MissingBinding { .. }
            | TemplateSyntax { .. }
            | ProviderExhausted { .. }
            | EmptyCompletion
            | ProviderTransient(_)
            | ProviderFatal(_)
            | EndpointFailure(_) => 3,
            _ => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
