use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the failure modes of
/// the pipeline stages; CLI exit codes and the Python bindings both key off
/// the variant name.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported language: {0}")]
    UnsupportedLanguage(String),
    #[error("unparseable input: {0}")]
    UnparseableInput(String),
    #[error("illegal identifier: {0:?}")]
    IllegalIdentifier(String),
    #[error("name collides with visible identifier: {0:?}")]
    NameCollision(String),
    #[error("reserved or protected word: {0:?}")]
    ReservedWord(String),
    #[error("variable has no enclosing statement context: {0}")]
    EmptyContext(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("node {0} has an empty neighborhood and no self-loop")]
    IsolatedNode(usize),
    #[error("head index {index} out of range for {heads} heads")]
    IndexOutOfRange { index: usize, heads: usize },
    #[error("decoder produced an empty output")]
    EmptyOutput,
    #[error("teacher unavailable: {0}")]
    TeacherUnavailable(String),
    #[error("no statement context for variable {0:?}")]
    NoStatementContext(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("message needs {needed} bits of capacity but only {available} available")]
    CapacityExceeded { needed: usize, available: usize },
    #[error("function contains no watermarkable variables")]
    NoVariables,
    #[error("beam search produced no legal candidate for variable {0:?}")]
    BeamExhausted(String),
    #[error("bit sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("n-gram model has not been trained")]
    UntrainedModel,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable code for CLI/stderr reporting.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnsupportedLanguage(_) => "unsupported_language",
            Error::UnparseableInput(_) => "unparseable_input",
            Error::IllegalIdentifier(_) => "illegal_identifier",
            Error::NameCollision(_) => "name_collision",
            Error::ReservedWord(_) => "reserved_word",
            Error::EmptyContext(_) => "empty_context",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::IsolatedNode(_) => "isolated_node",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EmptyOutput => "empty_output",
            Error::TeacherUnavailable(_) => "teacher_unavailable",
            Error::NoStatementContext(_) => "no_statement_context",
            Error::SchemaError(_) => "schema_error",
            Error::EmptyCorpus => "empty_corpus",
            Error::Divergence(_) => "divergence",
            Error::CapacityExceeded { .. } => "capacity_exceeded",
            Error::NoVariables => "no_variables",
            Error::BeamExhausted(_) => "beam_exhausted",
            Error::LengthMismatch(_, _) => "length_mismatch",
            Error::UntrainedModel => "untrained_model",
            Error::BadCheckpoint(_) => "bad_checkpoint",
            Error::BadConfig(_) => "bad_config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
