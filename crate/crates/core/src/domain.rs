//! Data exchanged with the external services and between the middleware
//! stages: user and item profiles, recommendation lists and learnt
//! preferences.
//!
//! All wire documents are UTF-8 JSON. Unknown top-level fields of a user
//! profile are kept as raw JSON text and written back unchanged, so the
//! recommender receives exactly what the user service produced.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::DomainError;

/// Seconds since the Unix epoch.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

fn canonical(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Canonical feature identity, `category=value`, trimmed and lower-cased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureKey(String);

impl FeatureKey {
    /// Parses `category=value`, canonicalizing both halves. The first `=`
    /// separates category from value.
    pub fn parse(raw: &str) -> Result<Self, DomainError> {
        let (category, value) = raw.split_once('=').ok_or_else(|| DomainError::InvalidField {
            field: "feature",
            reason: format!("`{raw}` is not of the form category=value"),
        })?;
        Ok(Feature::new(category, value)?.key())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn category(&self) -> &str {
        self.0.split_once('=').map_or("", |(c, _)| c)
    }

    pub fn value(&self) -> &str {
        self.0.split_once('=').map_or("", |(_, v)| v)
    }
}

impl TryFrom<String> for FeatureKey {
    type Error = DomainError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

impl From<FeatureKey> for String {
    fn from(k: FeatureKey) -> String {
        k.0
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A tag over one category of the domain, e.g. `genre=comedy`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FeatureWire")]
pub struct Feature {
    category: String,
    value: String,
}

#[derive(Deserialize)]
struct FeatureWire {
    category: Option<String>,
    value: Option<String>,
}

impl TryFrom<FeatureWire> for Feature {
    type Error = DomainError;

    fn try_from(w: FeatureWire) -> Result<Self, Self::Error> {
        Feature::new(
            &w.category.ok_or(DomainError::MissingField("category"))?,
            &w.value.ok_or(DomainError::MissingField("value"))?,
        )
    }
}

impl Feature {
    pub fn new(category: &str, value: &str) -> Result<Self, DomainError> {
        let category = canonical(category);
        let value = canonical(value);
        if category.is_empty() {
            return Err(DomainError::InvalidField {
                field: "category",
                reason: "empty".into(),
            });
        }
        if category.contains('=') {
            return Err(DomainError::InvalidField {
                field: "category",
                reason: "must not contain `=`".into(),
            });
        }
        if value.is_empty() {
            return Err(DomainError::InvalidField {
                field: "value",
                reason: "empty".into(),
            });
        }
        Ok(Self { category, value })
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn key(&self) -> FeatureKey {
        FeatureKey(format!("{}={}", self.category, self.value))
    }

    /// Already canonical, so this is the identity; kept for symmetry with
    /// the free-form constructors.
    pub fn canonicalize(&self) -> Feature {
        Feature::new(&self.category, &self.value).expect("canonical feature stays valid")
    }
}

impl PartialEq for Feature {
    fn eq(&self, other: &Self) -> bool {
        self.category == other.category && self.value == other.value
    }
}

impl Eq for Feature {}

impl From<&FeatureKey> for Feature {
    fn from(k: &FeatureKey) -> Self {
        Feature {
            category: k.category().to_owned(),
            value: k.value().to_owned(),
        }
    }
}

/// One `<item, score, timestamp>` triple of a user's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HistoryEntryWire")]
pub struct HistoryEntry {
    pub item: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<Timestamp>,
}

#[derive(Deserialize)]
struct HistoryEntryWire {
    item: Option<String>,
    score: Option<f64>,
    timestamp: Option<Timestamp>,
}

impl TryFrom<HistoryEntryWire> for HistoryEntry {
    type Error = DomainError;

    fn try_from(w: HistoryEntryWire) -> Result<Self, Self::Error> {
        let item = w.item.ok_or(DomainError::MissingField("item"))?;
        if item.is_empty() {
            return Err(DomainError::InvalidField {
                field: "item",
                reason: "empty".into(),
            });
        }
        if let Some(ts) = w.timestamp {
            if ts < 0 {
                return Err(DomainError::InvalidField {
                    field: "timestamp",
                    reason: format!("{ts} is negative"),
                });
            }
        }
        Ok(Self {
            item,
            score: w.score,
            timestamp: w.timestamp,
        })
    }
}

impl HistoryEntry {
    pub fn new(item: impl Into<String>) -> Self {
        Self {
            item: item.into(),
            score: None,
            timestamp: None,
        }
    }
}

/// A user's interaction history plus whatever else the user service sent.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "IndexMap<String, Box<RawValue>>")]
pub struct UserProfile {
    pub user_id: String,
    pub history: Vec<HistoryEntry>,
    /// Recommender-specific fields, kept as raw JSON in arrival order.
    pub extra: IndexMap<String, Box<RawValue>>,
}

impl UserProfile {
    pub fn new(user_id: impl Into<String>, history: Vec<HistoryEntry>) -> Self {
        Self {
            user_id: user_id.into(),
            history,
            extra: IndexMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("user profile serializes")
    }
}

fn malformed(e: serde_json::Error) -> DomainError {
    DomainError::MalformedDocument(e.to_string())
}

impl TryFrom<IndexMap<String, Box<RawValue>>> for UserProfile {
    type Error = DomainError;

    fn try_from(mut map: IndexMap<String, Box<RawValue>>) -> Result<Self, Self::Error> {
        let user_id: String = match map.shift_remove("user_id") {
            Some(raw) => serde_json::from_str(raw.get()).map_err(malformed)?,
            None => return Err(DomainError::MissingField("user_id")),
        };
        if user_id.is_empty() {
            return Err(DomainError::InvalidField {
                field: "user_id",
                reason: "empty".into(),
            });
        }
        let history: Vec<HistoryEntry> = match map.shift_remove("history") {
            Some(raw) => serde_json::from_str(raw.get()).map_err(malformed)?,
            None => return Err(DomainError::MissingField("history")),
        };
        Ok(Self {
            user_id,
            history,
            extra: map,
        })
    }
}

impl Serialize for UserProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2 + self.extra.len()))?;
        map.serialize_entry("user_id", &self.user_id)?;
        map.serialize_entry("history", &self.history)?;
        for (k, v) in &self.extra {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl PartialEq for UserProfile {
    fn eq(&self, other: &Self) -> bool {
        self.user_id == other.user_id
            && self.history == other.history
            && self.extra.len() == other.extra.len()
            && self
                .extra
                .iter()
                .zip(&other.extra)
                .all(|((ka, va), (kb, vb))| ka == kb && va.get() == vb.get())
    }
}

pub fn parse_user_profile(raw: &[u8]) -> Result<UserProfile, DomainError> {
    let map: IndexMap<String, Box<RawValue>> = serde_json::from_slice(raw).map_err(malformed)?;
    UserProfile::try_from(map)
}

/// An item and its set of feature tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ItemProfileWire")]
pub struct ItemProfile {
    pub item_id: String,
    pub title: String,
    features: Vec<Feature>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Deserialize)]
struct ItemProfileWire {
    item_id: Option<String>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    features: Vec<Feature>,
    description: Option<String>,
}

impl TryFrom<ItemProfileWire> for ItemProfile {
    type Error = DomainError;

    fn try_from(w: ItemProfileWire) -> Result<Self, Self::Error> {
        let item_id = w.item_id.ok_or(DomainError::MissingField("item_id"))?;
        if item_id.is_empty() {
            return Err(DomainError::InvalidField {
                field: "item_id",
                reason: "empty".into(),
            });
        }
        Ok(ItemProfile::new(item_id, w.title, w.features).with_description(w.description))
    }
}

impl ItemProfile {
    /// Features are deduplicated by key, keeping first occurrence order.
    pub fn new(item_id: impl Into<String>, title: impl Into<String>, features: Vec<Feature>) -> Self {
        let mut seen = HashSet::new();
        let features = features.into_iter().filter(|f| seen.insert(f.key())).collect();
        Self {
            item_id: item_id.into(),
            title: title.into(),
            features,
            description: None,
        }
    }

    pub fn with_description(mut self, description: Option<String>) -> Self {
        self.description = description;
        self
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_keys(&self) -> impl Iterator<Item = FeatureKey> + '_ {
        self.features.iter().map(Feature::key)
    }

    pub fn has_feature(&self, key: &FeatureKey) -> bool {
        self.features
            .iter()
            .any(|f| f.category() == key.category() && f.value() == key.value())
    }
}

pub fn parse_item_profile(raw: &[u8]) -> Result<ItemProfile, DomainError> {
    let wire: ItemProfileWire = serde_json::from_slice(raw).map_err(malformed)?;
    ItemProfile::try_from(wire)
}

/// One feature's share of an item/user similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: FeatureKey,
    pub score: f64,
}

/// Why an item was recommended: the features it shares with the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub item_id: String,
    #[serde(default)]
    pub contributions: Vec<Contribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendered: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoredItemWire")]
pub struct ScoredItem {
    pub item_id: String,
    /// Recommender-native score, on whatever scale the upstream uses.
    #[serde(rename = "score")]
    pub rec_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<Explanation>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExplanationWire {
    Text(String),
    Structured(Explanation),
}

#[derive(Deserialize)]
struct ScoredItemWire {
    item_id: Option<String>,
    score: Option<f64>,
    final_score: Option<f64>,
    explanation: Option<ExplanationWire>,
}

impl TryFrom<ScoredItemWire> for ScoredItem {
    type Error = DomainError;

    fn try_from(w: ScoredItemWire) -> Result<Self, Self::Error> {
        let item_id = w.item_id.ok_or(DomainError::MissingField("item_id"))?;
        let rec_score = w.score.ok_or(DomainError::MissingField("score"))?;
        if let Some(f) = w.final_score {
            if !(0.0..=1.0).contains(&f) {
                return Err(DomainError::InvalidField {
                    field: "final_score",
                    reason: format!("{f} outside [0, 1]"),
                });
            }
        }
        // Upstream recommenders may ship a plain-text justification.
        let explanation = w.explanation.map(|e| match e {
            ExplanationWire::Text(text) => Explanation {
                item_id: item_id.clone(),
                contributions: Vec::new(),
                rendered: Some(text),
            },
            ExplanationWire::Structured(e) => e,
        });
        Ok(Self {
            item_id,
            rec_score,
            final_score: w.final_score,
            explanation,
        })
    }
}

impl ScoredItem {
    pub fn new(item_id: impl Into<String>, rec_score: f64) -> Self {
        Self {
            item_id: item_id.into(),
            rec_score,
            final_score: None,
            explanation: None,
        }
    }
}

/// Ordered recommendations. Wire form is `{"items": [...]}`; a bare array
/// is accepted on input.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RecommendationList {
    pub items: Vec<ScoredItem>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecListWire {
    Wrapped { items: Vec<ScoredItem> },
    Bare(Vec<ScoredItem>),
}

impl RecommendationList {
    pub fn new(items: Vec<ScoredItem>) -> Result<Self, DomainError> {
        let mut seen = HashSet::new();
        for it in &items {
            if !seen.insert(it.item_id.as_str()) {
                return Err(DomainError::DuplicateItem(it.item_id.clone()));
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, item_id: &str) -> Option<&ScoredItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }

    pub fn position(&self, item_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.item_id == item_id)
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.item_id.as_str())
    }

    pub fn truncate(&mut self, n: usize) {
        self.items.truncate(n);
    }

    /// True when every item has a final score and the list is ordered by
    /// it, descending, with ascending item_id breaking ties.
    pub fn is_sorted_by_final(&self) -> bool {
        self.items
            .windows(2)
            .all(|w| match (w[0].final_score, w[1].final_score) {
                (Some(a), Some(b)) => a > b || (a == b && w[0].item_id < w[1].item_id),
                _ => false,
            })
            && self.items.iter().all(|i| i.final_score.is_some())
    }
}

impl<'de> Deserialize<'de> for RecommendationList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = match RecListWire::deserialize(d)? {
            RecListWire::Wrapped { items } | RecListWire::Bare(items) => items,
        };
        RecommendationList::new(items).map_err(serde::de::Error::custom)
    }
}

pub fn parse_recommendation_list(raw: &[u8]) -> Result<RecommendationList, DomainError> {
    let wire: RecListWire = serde_json::from_slice(raw).map_err(malformed)?;
    let items = match wire {
        RecListWire::Wrapped { items } | RecListWire::Bare(items) => items,
    };
    RecommendationList::new(items)
}

/// Feature weights in [-1, 1]. Zero entries are never stored.
pub type Weights = BTreeMap<FeatureKey, f64>;

/// Permanent per-user feature weights learnt from dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceStore {
    pub user_id: String,
    pub weights: Weights,
    pub last_updated: Timestamp,
}

impl PreferenceStore {
    pub fn empty(user_id: impl Into<String>, now: Timestamp) -> Self {
        Self {
            user_id: user_id.into(),
            weights: Weights::new(),
            last_updated: now,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.user_id.is_empty() {
            return Err(DomainError::InvalidField {
                field: "user_id",
                reason: "empty".into(),
            });
        }
        for (k, w) in &self.weights {
            if !(-1.0..=1.0).contains(w) || *w == 0.0 {
                return Err(DomainError::InvalidField {
                    field: "weights",
                    reason: format!("{k} = {w} not in [-1, 1] \\ {{0}}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Polarity {
    Like,
    Dislike,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Like => 1.0,
            Polarity::Dislike => -1.0,
        }
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Polarity::Like),
            -1 => Ok(Polarity::Dislike),
            other => Err(format!("polarity must be +1 or -1, got {other}")),
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        match p {
            Polarity::Like => 1,
            Polarity::Dislike => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Feature,
    Item,
}

/// What a preference was about. Item targets keep the item's feature keys
/// as they were when the preference was stated so replay needs no lookups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreferenceTarget {
    Feature { feature: FeatureKey },
    Item { item_id: String, features: Vec<FeatureKey> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceEvent {
    pub target: PreferenceTarget,
    pub polarity: Polarity,
    pub timestamp: Timestamp,
}

impl PreferenceEvent {
    pub fn kind(&self) -> EventKind {
        match self.target {
            PreferenceTarget::Feature { .. } => EventKind::Feature,
            PreferenceTarget::Item { .. } => EventKind::Item,
        }
    }
}

/// In-session copy of the user's preferences plus the log of what was said.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionProfile {
    pub session_id: String,
    pub user_id: String,
    pub temp_weights: Weights,
    pub events: Vec<PreferenceEvent>,
    pub started_at: Timestamp,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_profile_optional_fields_omitted() {
        let p = parse_user_profile(br#"{"user_id":"u1","history":[{"item":"i1"}]}"#).unwrap();
        assert_eq!(p.user_id, "u1");
        assert_eq!(p.history, vec![HistoryEntry::new("i1")]);
        assert!(p.extra.is_empty());
    }

    #[test]
    fn user_profile_requires_history() {
        assert_eq!(
            parse_user_profile(br#"{"user_id":"u1"}"#).unwrap_err(),
            DomainError::MissingField("history")
        );
        assert_eq!(
            parse_user_profile(br#"{"history":[]}"#).unwrap_err(),
            DomainError::MissingField("user_id")
        );
    }

    #[test]
    fn user_profile_extra_round_trips_verbatim() {
        let raw = br#"{"user_id":"u1","history":[],"favorite_color":"blue","age":3.50,"nested":{"b":1,"a":[1e3]}}"#;
        let p = parse_user_profile(raw).unwrap();
        assert_eq!(p.extra["favorite_color"].get(), r#""blue""#);
        assert_eq!(p.to_json(), std::str::from_utf8(raw).unwrap());
    }

    #[test]
    fn user_profile_rejects_syntax_errors_and_bad_entries() {
        assert!(matches!(
            parse_user_profile(b"{not json"),
            Err(DomainError::MalformedDocument(_))
        ));
        assert!(parse_user_profile(br#"{"user_id":"u","history":[{"item":"a","timestamp":-4}]}"#).is_err());
        assert!(parse_user_profile(br#"{"user_id":"","history":[]}"#).is_err());
    }

    #[test]
    fn item_profile_canonicalizes_and_dedups() {
        let p = parse_item_profile(
            br#"{"item_id":"i1","title":"T","features":[{"category":"Genre","value":"Comedy"},{"category":"genre","value":"comedy "}]}"#,
        )
        .unwrap();
        let keys: Vec<_> = p.feature_keys().map(|k| k.to_string()).collect();
        assert_eq!(keys, vec!["genre=comedy"]);
    }

    #[test]
    fn item_profile_empty_features_and_missing_id() {
        let p = parse_item_profile(br#"{"item_id":"i1","title":"T","features":[]}"#).unwrap();
        assert!(p.features().is_empty());
        assert_eq!(
            parse_item_profile(br#"{"title":"T"}"#).unwrap_err(),
            DomainError::MissingField("item_id")
        );
    }

    #[test]
    fn feature_key_parse_canonicalizes() {
        let k = FeatureKey::parse(" Actor = Jane Doe ").unwrap();
        assert_eq!(k.as_str(), "actor=jane doe");
        assert_eq!(k.category(), "actor");
        assert_eq!(k.value(), "jane doe");
        assert!(FeatureKey::parse("novalue").is_err());
        assert!(FeatureKey::parse("=x").is_err());
    }

    #[test]
    fn rec_list_accepts_both_shapes_and_rejects_duplicates() {
        let a = parse_recommendation_list(br#"{"items":[{"item_id":"a","score":2}]}"#).unwrap();
        let b = parse_recommendation_list(br#"[{"item_id":"a","score":2}]"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            parse_recommendation_list(br#"[{"item_id":"a","score":2},{"item_id":"a","score":1}]"#).unwrap_err(),
            DomainError::DuplicateItem("a".into())
        );
    }

    #[test]
    fn rec_list_text_explanation_becomes_rendered() {
        let l = parse_recommendation_list(br#"[{"item_id":"a","score":1,"explanation":"because"}]"#).unwrap();
        let e = l.items[0].explanation.as_ref().unwrap();
        assert_eq!(e.item_id, "a");
        assert_eq!(e.rendered.as_deref(), Some("because"));
    }

    #[test]
    fn polarity_wire_is_signed_integer() {
        let e = PreferenceEvent {
            target: PreferenceTarget::Feature {
                feature: FeatureKey::parse("genre=comedy").unwrap(),
            },
            polarity: Polarity::Dislike,
            timestamp: 5,
        };
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains(r#""polarity":-1"#), "{s}");
        assert_eq!(serde_json::from_str::<PreferenceEvent>(&s).unwrap(), e);
        assert!(serde_json::from_str::<Polarity>("0").is_err());
    }

    #[test]
    fn preference_store_validation() {
        let mut s = PreferenceStore::empty("u", 0);
        s.weights.insert(FeatureKey::parse("genre=x").unwrap(), 0.5);
        assert!(s.validate().is_ok());
        s.weights.insert(FeatureKey::parse("genre=y").unwrap(), 1.5);
        assert!(s.validate().is_err());
    }
}
