//! TF-IDF space over item feature tags.
//!
//! Features are set-valued tags, so term frequency is always 1 and an item's
//! raw weight for a feature is its inverse document frequency
//! `ln(n_docs / df)`. Features the model has never seen are treated as the
//! rarest possible (`df = 1`). Every vector handed out by this module is
//! either empty or has unit L2 norm.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::{FeatureKey, ItemProfile, UserProfile, Weights};
use crate::error::VectorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    n_docs: usize,
    df: BTreeMap<FeatureKey, usize>,
    idf: BTreeMap<FeatureKey, f64>,
}

impl TfIdfModel {
    pub fn build<'a, I>(corpus: I) -> Result<Self, VectorError>
    where
        I: IntoIterator<Item = &'a ItemProfile>,
    {
        let mut n_docs = 0usize;
        let mut df: BTreeMap<FeatureKey, usize> = BTreeMap::new();
        for item in corpus {
            n_docs += 1;
            // ItemProfile features are already deduplicated.
            for key in item.feature_keys() {
                *df.entry(key).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(VectorError::EmptyCorpus);
        }
        let n = n_docs as f64;
        let idf = df.iter().map(|(k, &d)| (k.clone(), (n / d as f64).ln())).collect();
        Ok(Self { n_docs, df, idf })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, key: &FeatureKey) -> Option<usize> {
        self.df.get(key).copied()
    }

    pub fn known_features(&self) -> impl Iterator<Item = &FeatureKey> {
        self.df.keys()
    }

    /// idf of a feature, or `ln(n_docs)` for features outside the corpus.
    pub fn idf(&self, key: &FeatureKey) -> f64 {
        self.idf.get(key).copied().unwrap_or_else(|| (self.n_docs as f64).ln())
    }

    pub fn vectorize_item(&self, item: &ItemProfile) -> FeatureVector {
        FeatureVector::from_entries(item.feature_keys().map(|k| {
            let w = self.idf(&k);
            (k, w)
        }))
        .normalized()
    }

    /// Score-weighted sum of the history items' vectors (unscored entries
    /// weigh 1.0). Entries whose item is not in `items` are skipped.
    pub fn vectorize_history(&self, profile: &UserProfile, items: &HashMap<String, ItemProfile>) -> FeatureVector {
        let mut acc = FeatureVector::default();
        for entry in &profile.history {
            if let Some(item) = items.get(&entry.item) {
                acc.add_scaled(&self.vectorize_item(item), entry.score.unwrap_or(1.0));
            }
        }
        acc.normalized()
    }

    pub fn vectorize_preferences(&self, prefs: &Weights) -> FeatureVector {
        FeatureVector::from_entries(prefs.iter().map(|(k, &w)| (k.clone(), w * self.idf(k)))).normalized()
    }
}

/// Sparse vector over feature keys. Never stores explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    entries: BTreeMap<FeatureKey, f64>,
}

impl FeatureVector {
    pub fn from_entries<I: IntoIterator<Item = (FeatureKey, f64)>>(entries: I) -> Self {
        let mut v = Self::default();
        for (k, w) in entries {
            v.add_entry(k, w);
        }
        v
    }

    fn add_entry(&mut self, key: FeatureKey, w: f64) {
        match self.entries.entry(key) {
            Entry::Vacant(e) => {
                if w != 0.0 {
                    e.insert(w);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += w;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn get(&self, key: &FeatureKey) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FeatureKey, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.entries.iter().map(|(k, v)| v * large.get(k)).sum()
    }

    pub fn scaled(&self, factor: f64) -> FeatureVector {
        FeatureVector::from_entries(self.entries.iter().map(|(k, v)| (k.clone(), v * factor)))
    }

    pub fn add_scaled(&mut self, other: &FeatureVector, factor: f64) {
        for (k, v) in &other.entries {
            self.add_entry(k.clone(), v * factor);
        }
    }

    /// Unit-norm copy; the zero vector maps to the empty vector.
    pub fn normalized(&self) -> FeatureVector {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return FeatureVector::default();
        }
        self.scaled(1.0 / n)
    }
}

/// Cosine similarity; 0 when either side is empty.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::domain::{Feature, HistoryEntry};
    use approx::assert_abs_diff_eq;

    fn key(s: &str) -> FeatureKey {
        FeatureKey::parse(s).unwrap()
    }

    fn item(id: &str, feats: &[&str]) -> ItemProfile {
        ItemProfile::new(
            id,
            id,
            feats
                .iter()
                .map(|f| {
                    let (c, v) = f.split_once('=').unwrap();
                    Feature::new(c, v).unwrap()
                })
                .collect(),
        )
    }

    fn vec_of(pairs: &[(&str, f64)]) -> FeatureVector {
        FeatureVector::from_entries(pairs.iter().map(|(k, v)| (key(k), *v)))
    }

    /// 4 items: comedy in 2, actor=x in 1, genre=all in all 4.
    fn corpus() -> Vec<ItemProfile> {
        vec![
            item("a", &["genre=comedy", "actor=x", "tag=all"]),
            item("b", &["genre=comedy", "tag=all"]),
            item("c", &["genre=horror", "tag=all"]),
            item("d", &["genre=horror", "tag=all"]),
        ]
    }

    #[test]
    fn idf_spot_values() {
        let m = TfIdfModel::build(&corpus()).unwrap();
        assert_abs_diff_eq!(m.idf(&key("genre=comedy")), 0.693_147_18, epsilon = 1e-8);
        assert_abs_diff_eq!(m.idf(&key("actor=x")), 1.386_294_36, epsilon = 1e-8);
        assert_eq!(m.idf(&key("tag=all")), 0.0);
        assert_abs_diff_eq!(m.idf(&key("genre=unseen")), 4f64.ln(), epsilon = 1e-12);
        assert_eq!(m.df(&key("genre=comedy")), Some(2));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let none: Vec<ItemProfile> = Vec::new();
        assert_eq!(TfIdfModel::build(&none).unwrap_err(), VectorError::EmptyCorpus);
    }

    #[test]
    fn item_vectors() {
        let m = TfIdfModel::build(&corpus()).unwrap();
        let v = m.vectorize_item(&item("q", &["genre=comedy"]));
        assert_abs_diff_eq!(v.get(&key("genre=comedy")), 1.0, epsilon = 1e-12);
        assert!(m.vectorize_item(&item("q", &["tag=all"])).is_empty());
        // (a, 2a) / |(a, 2a)| = (1, 2) / sqrt 5
        let v = m.vectorize_item(&item("q", &["genre=comedy", "actor=x"]));
        assert_abs_diff_eq!(v.get(&key("genre=comedy")), 0.447_213_6, epsilon = 1e-7);
        assert_abs_diff_eq!(v.get(&key("actor=x")), 0.894_427_2, epsilon = 1e-7);
    }

    #[test]
    fn history_vectors() {
        let m = TfIdfModel::build(&corpus()).unwrap();
        let items: HashMap<_, _> = corpus().into_iter().map(|i| (i.item_id.clone(), i)).collect();
        let empty = UserProfile::new("u", vec![]);
        assert!(m.vectorize_history(&empty, &items).is_empty());

        let one = UserProfile::new("u", vec![HistoryEntry::new("a")]);
        let va = m.vectorize_item(&items["a"]);
        let vh = m.vectorize_history(&one, &items);
        for (k, w) in va.iter() {
            assert_abs_diff_eq!(vh.get(k), w, epsilon = 1e-12);
        }

        // b = {comedy}, c = {horror}: disjoint, both unit -> each 1/sqrt 2
        let two = UserProfile::new(
            "u",
            vec![
                HistoryEntry::new("b"),
                HistoryEntry::new("c"),
                HistoryEntry::new("missing"),
            ],
        );
        let v = m.vectorize_history(&two, &items);
        assert_abs_diff_eq!(
            v.get(&key("genre=comedy")),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            v.get(&key("genre=horror")),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn preference_vectors() {
        let m = TfIdfModel::build(&corpus()).unwrap();
        assert!(m.vectorize_preferences(&Weights::new()).is_empty());
        let mut p = Weights::new();
        p.insert(key("genre=comedy"), 1.0);
        assert_abs_diff_eq!(m.vectorize_preferences(&p).get(&key("genre=comedy")), 1.0);
        p.insert(key("genre=horror"), -1.0);
        let v = m.vectorize_preferences(&p);
        assert_abs_diff_eq!(v.get(&key("genre=comedy")), 0.707_106_78, epsilon = 1e-8);
        assert_abs_diff_eq!(v.get(&key("genre=horror")), -0.707_106_78, epsilon = 1e-8);
    }

    #[test]
    fn cosine_spot_values() {
        assert_abs_diff_eq!(cosine(&vec_of(&[("a=x", 1.0)]), &vec_of(&[("a=x", 1.0)])), 1.0);
        assert_eq!(cosine(&vec_of(&[("a=x", 1.0)]), &vec_of(&[("a=y", 1.0)])), 0.0);
        assert_abs_diff_eq!(
            cosine(&vec_of(&[("a=x", 1.0), ("a=y", 1.0)]), &vec_of(&[("a=x", 1.0)])),
            0.707_11,
            epsilon = 1e-5
        );
        assert_eq!(cosine(&FeatureVector::default(), &vec_of(&[("a=x", 1.0)])), 0.0);
    }

    #[test]
    fn cancellation_drops_entries() {
        let mut v = vec_of(&[("a=x", 0.5), ("a=y", 1.0)]);
        v.add_scaled(&vec_of(&[("a=x", 1.0)]), -0.5);
        assert_eq!(v.len(), 1);
        assert_eq!(v.get(&key("a=x")), 0.0);
    }
}
