//! Post-processing of the upstream recommendation list.
//!
//! Each item's final score blends the upstream score, min-max normalized over
//! the list, with the cosine between the user's preference vector and the
//! item vector mapped onto [0, 1]:
//!
//! `final = alpha * r + (1 - alpha) * (cos + 1) / 2`

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{RecommendationList, ScoredItem};
use crate::error::ConfigError;
use crate::vector::{cosine, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerankConfig {
    /// Weight of the upstream score.
    pub alpha: f64,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl RerankConfig {
    pub fn new(alpha: f64) -> Result<Self, ConfigError> {
        let cfg = Self { alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::OutOfRange {
                name: "alpha",
                value: self.alpha,
                range: "[0, 1]",
            });
        }
        Ok(())
    }
}

/// Descending by final score, ascending item_id on ties.
pub fn by_final_score(a: &ScoredItem, b: &ScoredItem) -> Ordering {
    let fa = a.final_score.unwrap_or(f64::NEG_INFINITY);
    let fb = b.final_score.unwrap_or(f64::NEG_INFINITY);
    fb.total_cmp(&fa).then_with(|| a.item_id.cmp(&b.item_id))
}

/// Min-max normalization; all-equal lists map to 1.0.
fn normalized_scores(items: &[ScoredItem]) -> Vec<f64> {
    let (lo, hi) = items.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), it| {
        (lo.min(it.rec_score), hi.max(it.rec_score))
    });
    let span = hi - lo;
    items
        .iter()
        .map(|it| if span > 0.0 { (it.rec_score - lo) / span } else { 1.0 })
        .collect()
}

pub fn rerank(
    list: &RecommendationList,
    pref_vec: &FeatureVector,
    item_vecs: &HashMap<String, FeatureVector>,
    cfg: RerankConfig,
) -> RecommendationList {
    let empty = FeatureVector::default();
    let r = normalized_scores(&list.items);
    let mut items: Vec<ScoredItem> = list
        .items
        .iter()
        .zip(r)
        .map(|(it, r)| {
            let vec = item_vecs.get(&it.item_id).unwrap_or(&empty);
            let s = (cosine(pref_vec, vec) + 1.0) / 2.0;
            let fin = (cfg.alpha * r + (1.0 - cfg.alpha) * s).clamp(0.0, 1.0);
            ScoredItem {
                final_score: Some(fin),
                ..it.clone()
            }
        })
        .collect();
    items.sort_by(by_final_score);
    RecommendationList { items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FeatureKey;

    fn key(s: &str) -> FeatureKey {
        FeatureKey::parse(s).unwrap()
    }

    fn list(scores: &[(&str, f64)]) -> RecommendationList {
        RecommendationList::new(scores.iter().map(|(id, s)| ScoredItem::new(*id, *s)).collect()).unwrap()
    }

    fn ids(l: &RecommendationList) -> Vec<&str> {
        l.item_ids().collect()
    }

    #[test]
    fn alpha_one_keeps_upstream_order() {
        let l = list(&[("c", 3.0), ("a", 2.0), ("b", 2.0), ("d", -1.0)]);
        let pref = FeatureVector::from_entries([(key("g=x"), 1.0)]);
        let vecs: HashMap<_, _> = [("d".to_string(), pref.clone())].into();
        let out = rerank(&l, &pref, &vecs, RerankConfig::new(1.0).unwrap());
        assert_eq!(ids(&out), vec!["c", "a", "b", "d"]);
    }

    #[test]
    fn empty_preferences_keep_upstream_order() {
        let l = list(&[("z", 0.9), ("y", 0.5), ("x", 0.1)]);
        let vecs: HashMap<_, _> = [("x".to_string(), FeatureVector::from_entries([(key("g=x"), 1.0)]))].into();
        let out = rerank(&l, &FeatureVector::default(), &vecs, RerankConfig::default());
        assert_eq!(ids(&out), vec!["z", "y", "x"]);
        assert_eq!(out.items[2].final_score, Some(0.25));
    }

    #[test]
    fn opposite_signals_tie_and_break_by_id() {
        // a: r = 1, cos = -1 ; b: r = 0, cos = +1
        let l = list(&[("b", 0.5), ("a", 1.0)]);
        let pref = FeatureVector::from_entries([(key("g=x"), 1.0)]);
        let vecs: HashMap<_, _> = [
            ("a".to_string(), FeatureVector::from_entries([(key("g=x"), -1.0)])),
            ("b".to_string(), FeatureVector::from_entries([(key("g=x"), 1.0)])),
        ]
        .into();
        let out = rerank(&l, &pref, &vecs, RerankConfig::new(0.5).unwrap());
        assert_eq!(ids(&out), vec!["a", "b"]);
        assert_eq!(out.items[0].final_score, Some(0.5));
        assert_eq!(out.items[1].final_score, Some(0.5));
    }

    #[test]
    fn all_equal_scores_normalize_to_one() {
        let l = list(&[("a", 7.0), ("b", 7.0)]);
        let out = rerank(
            &l,
            &FeatureVector::default(),
            &HashMap::new(),
            RerankConfig::new(1.0).unwrap(),
        );
        assert!(out.items.iter().all(|i| i.final_score == Some(1.0)));
        assert_eq!(out.items[0].rec_score, 7.0);
    }

    #[test]
    fn empty_list() {
        let out = rerank(
            &RecommendationList::default(),
            &FeatureVector::default(),
            &HashMap::new(),
            RerankConfig::default(),
        );
        assert!(out.is_empty());
    }

    #[test]
    fn alpha_is_validated() {
        assert!(RerankConfig::new(1.5).is_err());
        assert!(RerankConfig::new(-0.1).is_err());
    }
}
