use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input data is inconsistent (dimensions, missing embeddings, bad spans).
    #[error("data error: {0}")]
    Data(String),

    /// A file parsed but violates the schema or the model invariants.
    #[error("schema error in {context}: {message}")]
    Schema { context: String, message: String },

    #[error("malformed input: {0}")]
    Syntax(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn schema(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            context: context.into(),
            message: message.into(),
        }
    }
}
