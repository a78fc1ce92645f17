use thiserror::Error;

use crate::domain::{Polarity, PreferenceStore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("item `{0}` appears more than once in the recommendation list")]
    DuplicateItem(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("cannot build a TF-IDF model from an empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("`{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreferenceError {
    #[error("item `{0}` has no features; preference logged without weight change")]
    EmptyFeatureSet(String),
    /// The store was written after `now`. The undecayed store is carried along.
    #[error("clock skew: now={now} precedes last_updated={last_updated}")]
    ClockSkew {
        now: i64,
        last_updated: i64,
        store: PreferenceStore,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuestionError {
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("feature `{0}` does not occur in any candidate")]
    UnknownFeature(String),
    /// Filtering would leave nothing. Candidates stay as they were but the
    /// answer still carries a preference.
    #[error("answer would remove every candidate; filter skipped")]
    WouldEmptyCandidates { polarity: Polarity },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("cannot resolve item reference `{0}`")]
    UnknownItemReference(String),
    #[error("unknown message key `{0}`")]
    UnknownMessageKey(String),
    #[error("message `{key}` needs slot `{slot}`")]
    MissingSlot { key: String, slot: String },
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("invalid message catalog: {0}")]
    InvalidCatalog(String),
}
