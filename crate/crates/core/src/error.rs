use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty vocabulary: no term occurs at least {min_count} times")]
    EmptyVocabulary { min_count: usize },

    #[error("unknown term id {0}")]
    UnknownTerm(usize),

    #[error("unknown document {0:?}")]
    UnknownDocument(String),

    #[error("unknown query {0:?}")]
    UnknownQuery(String),

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("empty document")]
    EmptyDocument,

    #[error("query has no in-vocabulary terms")]
    NoQueryTerms,

    #[error("zero-norm embedding for term {0:?}")]
    ZeroNormEmbedding(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss((usize, usize)),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("no trainable query: every query lacks a positive or a candidate negative")]
    NoTrainableQuery,

    #[error("run and qrels share no query")]
    NoCommonQueries,

    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
