use thiserror::Error;

/// Errors shared across the library.
///
/// Parse errors carry enough position information (file, line) to point at
/// the offending record; graph errors name the offending node.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed record: {msg}")]
    MalformedRecord {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invariant violation at node {node}: {msg}")]
    InvariantViolation { node: u64, msg: String },

    #[error("duplicate node id {0}")]
    DuplicateNode(u64),

    #[error("duplicate edge ({src}, {dst}, {kind})")]
    DuplicateEdge { src: u64, dst: u64, kind: String },

    #[error("edge endpoint {0} is not a known node")]
    UnknownEndpoint(u64),

    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("redirect loop involving node {0}")]
    RedirectLoop(u64),

    #[error("duplicate normalized title {title:?} (nodes {first} and {second})")]
    DuplicateTitle {
        title: String,
        first: u64,
        second: u64,
    },

    #[error("{path}: malformed XML at {pos}: {msg}")]
    Xml {
        path: String,
        pos: String,
        msg: String,
    },

    #[error("{path}: missing required field {field:?}")]
    MissingField { path: String, field: String },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),

    #[error("invalid element path {path:?}: {msg}")]
    BadPath { path: String, msg: String },

    #[error("no query terms")]
    NoQueryTerms,

    #[error("rank cutoff must be positive")]
    ZeroRank,

    #[error("seed node {0} is not an article")]
    SeedNotArticle(u64),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("query {query_id:?}: {msg}")]
    BadQuery { query_id: String, msg: String },

    #[error("cycle length cap must be at least 2, got {0}")]
    BadMaxLen(usize),

    #[error("invalid expansion config: {0}")]
    BadExpansionConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: invalid JSON: {msg}")]
    Json {
        path: String,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
