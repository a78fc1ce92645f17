//! Per-item justifications and the user-profile view.
//!
//! The user is represented by one vector, the normalized blend
//! `beta * history + (1 - beta) * stated`. An item's explanation lists the
//! features where item and user point the same way, scored by their term of
//! the dot product.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Contribution, Explanation, FeatureKey, ScoredItem, Weights};
use crate::vector::FeatureVector;

pub fn combined_user_vector(profile_vec: &FeatureVector, pref_vec: &FeatureVector, beta: f64) -> FeatureVector {
    let mut combined = profile_vec.scaled(beta);
    combined.add_scaled(pref_vec, 1.0 - beta);
    combined.normalized()
}

/// All positive per-feature terms of `item_vec . combined`, largest first.
pub fn contributions(item_vec: &FeatureVector, combined: &FeatureVector) -> Vec<Contribution> {
    let mut out: Vec<Contribution> = item_vec
        .iter()
        .filter_map(|(k, w)| {
            let score = w * combined.get(k);
            (score > 0.0).then(|| Contribution {
                feature: k.clone(),
                score,
            })
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(&b.feature)));
    out
}

pub fn explain(
    item_id: &str,
    item_vec: &FeatureVector,
    profile_vec: &FeatureVector,
    pref_vec: &FeatureVector,
    beta: f64,
    k_explain: usize,
) -> Explanation {
    let combined = combined_user_vector(profile_vec, pref_vec, beta);
    let mut contributions = contributions(item_vec, &combined);
    contributions.truncate(k_explain);
    Explanation {
        item_id: item_id.to_owned(),
        contributions,
        rendered: None,
    }
}

pub fn needs_explanation(item: &ScoredItem) -> bool {
    item.explanation.is_none()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    History,
    Stated,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub feature: FeatureKey,
    pub weight: f64,
    pub source: ProfileSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileView {
    pub entries: Vec<ProfileEntry>,
}

/// Union of history-derived and stated weights. A feature present on both
/// sides keeps whichever weight has the larger magnitude.
pub fn profile_view(history: &Weights, stated: &Weights, k: usize) -> ProfileView {
    let mut merged: BTreeMap<&FeatureKey, (f64, ProfileSource)> =
        history.iter().map(|(f, &w)| (f, (w, ProfileSource::History))).collect();
    for (f, &w) in stated {
        merged
            .entry(f)
            .and_modify(|(cur, src)| {
                if w.abs() > cur.abs() {
                    *cur = w;
                }
                *src = ProfileSource::Both;
            })
            .or_insert((w, ProfileSource::Stated));
    }
    let mut entries: Vec<ProfileEntry> = merged
        .into_iter()
        .map(|(f, (weight, source))| ProfileEntry {
            feature: f.clone(),
            weight,
            source,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.weight
            .abs()
            .total_cmp(&a.weight.abs())
            .then_with(|| a.feature.cmp(&b.feature))
    });
    entries.truncate(k);
    ProfileView { entries }
}

/// Turns a history vector into displayable weights: scaled so the
/// strongest feature has magnitude 1.
pub fn history_weights(profile_vec: &FeatureVector) -> Weights {
    let max = profile_vec.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return Weights::new();
    }
    profile_vec.iter().map(|(k, w)| (k.clone(), w / max)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn key(s: &str) -> FeatureKey {
        FeatureKey::parse(s).unwrap()
    }

    fn v(pairs: &[(&str, f64)]) -> FeatureVector {
        FeatureVector::from_entries(pairs.iter().map(|(k, w)| (key(k), *w)))
    }

    fn w(pairs: &[(&str, f64)]) -> Weights {
        pairs.iter().map(|(k, x)| (key(k), *x)).collect()
    }

    #[test]
    fn identical_unit_vectors() {
        let e = explain(
            "i",
            &v(&[("genre=comedy", 1.0)]),
            &v(&[("genre=comedy", 1.0)]),
            &v(&[]),
            1.0,
            3,
        );
        assert_eq!(e.contributions.len(), 1);
        assert_abs_diff_eq!(e.contributions[0].score, 1.0);
    }

    #[test]
    fn disjoint_vectors_explain_nothing() {
        let e = explain(
            "i",
            &v(&[("genre=comedy", 1.0)]),
            &v(&[("genre=drama", 1.0)]),
            &v(&[]),
            0.5,
            3,
        );
        assert!(e.contributions.is_empty());
    }

    #[test]
    fn per_axis_terms() {
        // combined is already unit: beta = 1 passes the profile vector through.
        let e = explain(
            "i",
            &v(&[("genre=comedy", 0.8), ("actor=x", 0.6)]),
            &v(&[("genre=comedy", 0.6), ("genre=drama", 0.8)]),
            &v(&[]),
            1.0,
            3,
        );
        assert_eq!(e.contributions.len(), 1);
        assert_eq!(e.contributions[0].feature, key("genre=comedy"));
        assert_abs_diff_eq!(e.contributions[0].score, 0.48, epsilon = 1e-12);
    }

    #[test]
    fn negative_terms_excluded_and_truncated() {
        let item = v(&[("a=1", 0.5), ("a=2", 0.5), ("a=3", 0.5), ("a=4", 0.5)]);
        let pref = v(&[("a=1", 0.4), ("a=2", -0.5), ("a=3", 0.3), ("a=4", 0.2)]);
        let e = explain("i", &item, &v(&[]), &pref, 0.0, 2);
        let feats: Vec<_> = e.contributions.iter().map(|c| c.feature.as_str()).collect();
        assert_eq!(feats, vec!["a=1", "a=3"]);
    }

    #[test]
    fn needs_explanation_only_when_absent() {
        let mut item = ScoredItem::new("i", 1.0);
        assert!(needs_explanation(&item));
        item.explanation = Some(Explanation {
            item_id: "i".into(),
            contributions: vec![],
            rendered: Some("upstream".into()),
        });
        assert!(!needs_explanation(&item));
    }

    #[test]
    fn profile_view_union() {
        let pv = profile_view(&w(&[("genre=comedy", 0.5)]), &w(&[]), 10);
        assert_eq!(pv.entries[0].source, ProfileSource::History);
        assert_eq!(pv.entries[0].weight, 0.5);

        let pv = profile_view(&w(&[]), &w(&[("genre=horror", -0.6)]), 10);
        assert_eq!(pv.entries[0].source, ProfileSource::Stated);
        assert_eq!(pv.entries[0].weight, -0.6);

        let pv = profile_view(&w(&[("genre=comedy", 0.5)]), &w(&[("genre=comedy", 0.9)]), 10);
        assert_eq!(pv.entries.len(), 1);
        assert_eq!(pv.entries[0].source, ProfileSource::Both);
        assert_eq!(pv.entries[0].weight, 0.9);
    }

    #[test]
    fn profile_view_sorted_by_magnitude_and_truncated() {
        let pv = profile_view(&w(&[("a=1", 0.2), ("a=2", 0.7)]), &w(&[("a=3", -0.9), ("a=4", 0.1)]), 3);
        let feats: Vec<_> = pv.entries.iter().map(|e| e.feature.as_str()).collect();
        assert_eq!(feats, vec!["a=3", "a=2", "a=1"]);
    }
}
