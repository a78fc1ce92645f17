use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::DialogueError;

/// Response templates keyed by message name. `{name}` marks a slot; a brace
/// pair around anything that is not a plain identifier is literal text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MessageCatalog {
    templates: IndexMap<String, String>,
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces(template: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_slot_name(&after[..close]) => {
                if open > 0 {
                    out.push(Piece::Text(&rest[..open]));
                }
                out.push(Piece::Slot(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                out.push(Piece::Text(&rest[..=open]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    out
}

impl MessageCatalog {
    pub fn from_json(raw: &[u8]) -> Result<Self, DialogueError> {
        serde_json::from_slice(raw).map_err(|e| DialogueError::InvalidCatalog(e.to_string()))
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            templates: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.templates.contains_key(key)
    }

    /// Fails on the first key in `keys` the catalog lacks.
    pub fn require<'a, I: IntoIterator<Item = &'a str>>(&self, keys: I) -> Result<(), DialogueError> {
        for k in keys {
            if !self.contains(k) {
                return Err(DialogueError::UnknownMessageKey(k.to_owned()));
            }
        }
        Ok(())
    }

    /// Slot names used by a template, in order of appearance.
    pub fn slots(&self, key: &str) -> Result<Vec<&str>, DialogueError> {
        let t = self
            .templates
            .get(key)
            .ok_or_else(|| DialogueError::UnknownMessageKey(key.to_owned()))?;
        Ok(pieces(t)
            .into_iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s),
                Piece::Text(_) => None,
            })
            .collect())
    }

    pub fn render(&self, key: &str, slots: &HashMap<&str, String>) -> Result<String, DialogueError> {
        let t = self
            .templates
            .get(key)
            .ok_or_else(|| DialogueError::UnknownMessageKey(key.to_owned()))?;
        let mut out = String::with_capacity(t.len());
        for piece in pieces(t) {
            match piece {
                Piece::Text(s) => out.push_str(s),
                Piece::Slot(name) => match slots.get(name) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(DialogueError::MissingSlot {
                            key: key.to_owned(),
                            slot: name.to_owned(),
                        })
                    }
                },
            }
        }
        Ok(out)
    }
}

pub fn render(key: &str, slots: &HashMap<&str, String>, catalog: &MessageCatalog) -> Result<String, DialogueError> {
    catalog.render(key, slots)
}
