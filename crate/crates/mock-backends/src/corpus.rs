use std::collections::{HashMap, HashSet};
use std::path::Path;

use irf_core::{ItemProfile, UserProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The synthetic catalog shipped with the crate.
pub const BUNDLED_CORPUS: &str = include_str!("../data/corpus.json");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse corpus: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

/// Items and users served by the mock services.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub items: Vec<ItemProfile>,
    pub users: Vec<UserProfile>,
}

impl Corpus {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_CORPUS.as_bytes()).expect("bundled corpus is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_json(&std::fs::read(path)?)
    }

    pub fn from_json(raw: &[u8]) -> Result<Self, CorpusError> {
        let corpus: Corpus = serde_json::from_slice(raw)?;
        corpus.validate()?;
        Ok(corpus)
    }

    /// Every item has a feature, ids are unique and every history entry
    /// points at a known item.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = HashSet::new();
        for item in &self.items {
            if !ids.insert(item.item_id.as_str()) {
                return Err(CorpusError::Invalid(format!("duplicate item `{}`", item.item_id)));
            }
            if item.features().is_empty() {
                return Err(CorpusError::Invalid(format!("item `{}` has no features", item.item_id)));
            }
        }
        if ids.is_empty() {
            return Err(CorpusError::Invalid("no items".into()));
        }
        let mut users = HashSet::new();
        for user in &self.users {
            if !users.insert(user.user_id.as_str()) {
                return Err(CorpusError::Invalid(format!("duplicate user `{}`", user.user_id)));
            }
            if let Some(e) = user.history.iter().find(|e| !ids.contains(e.item.as_str())) {
                return Err(CorpusError::Invalid(format!(
                    "user `{}` references unknown item `{}`",
                    user.user_id, e.item
                )));
            }
        }
        Ok(())
    }

    pub fn item_map(&self) -> HashMap<String, ItemProfile> {
        self.items.iter().map(|i| (i.item_id.clone(), i.clone())).collect()
    }
}
