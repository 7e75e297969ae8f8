use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed corpus or split input. `line` is 1-based; 0 when unknown.
    #[error("parse error in document `{doc_id}` at line {line}: {message}")]
    Parse {
        doc_id: String,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("document `{doc_id}` has no gold {target} clause{detail}")]
    NoGold {
        doc_id: String,
        target: &'static str,
        detail: String,
    },

    #[error("question of {tokens} tokens exceeds the sequence budget of {budget}")]
    QuestionTooLong { tokens: usize, budget: usize },

    #[error("token id {id} out of vocabulary (size {vocab_size})")]
    OutOfVocabulary { id: u32, vocab_size: usize },

    #[error("empty context")]
    EmptyContext,

    #[error("encoder error: {0}")]
    Encoder(String),

    /// Wraps a failure with the document it happened on.
    #[error("document `{doc_id}`: {source}")]
    InDocument {
        doc_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(doc_id: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            doc_id: doc_id.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_document(self, doc_id: &str) -> Self {
        match self {
            e @ Error::InDocument { .. } => e,
            e => Error::InDocument {
                doc_id: doc_id.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// True for failures caused by the input data rather than by a model.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::NoGold { .. } | Error::Json(_) => true,
            Error::InDocument { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
