//! Error types shared across the engine.

use thiserror::Error;

/// Errors raised by graph construction and mutation.
#[derive(Debug, Error)]
pub enum GraphError {
    /// Two different normalized payloads hashed to the same node id.
    #[error("id collision: id {id} already bound to a different payload")]
    IdCollision { id: String },

    /// A document failed schema validation; `path` points at the offending field.
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },

    /// An operation was called outside its contract.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl GraphError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        GraphError::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Errors raised by generation/inspection backends.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("missing API credentials: set the {0} environment variable")]
    Auth(String),

    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },

    #[error("unparseable backend output after {attempts} attempts: {raw}")]
    Parse { attempts: u32, raw: String },

    #[error("no recorded response for cache key {cache_key}")]
    FixtureMismatch { cache_key: String },

    #[error("backend does not support task {0}")]
    UnsupportedTask(String),

    #[error("http error: {0}")]
    Http(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised by exact expression evaluation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("malformed expression: {0}")]
    Malformed(String),

    #[error("division by zero")]
    DivideByZero,

    #[error("exponent must evaluate to an integer, got {0}")]
    NonIntegerExponent(String),

    #[error("exponent {0} out of supported range")]
    ExponentRange(String),

    #[error("unbound variable {0}")]
    UnboundVariable(String),
}

/// Errors raised by task verifiers and oracles.
#[derive(Debug, Error)]
pub enum TaskError {
    #[error("malformed step annotation: {0}")]
    MalformedAnnotation(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("malformed problem: {0}")]
    MalformedProblem(String),
}
