use std::collections::{HashMap, HashSet};

use irf_core::{cosine, ItemProfile, RecommendationList, ScoredItem, TfIdfModel, UserProfile};
use serde::{Deserialize, Serialize};

/// Output scale of the mock recommender.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScale {
    /// Cosine scores as is, in [0, 1].
    #[default]
    Unit,
    /// Scores multiplied by 100.
    Hundred,
}

impl ScoreScale {
    pub fn factor(self) -> f64 {
        match self {
            ScoreScale::Unit => 1.0,
            ScoreScale::Hundred => 100.0,
        }
    }
}

/// Content-based scoring of every unseen item against the user's history.
/// Sorted by score descending, item_id ascending on ties.
pub fn mock_recommend(
    profile: &UserProfile,
    model: &TfIdfModel,
    items: &HashMap<String, ItemProfile>,
    scale: ScoreScale,
) -> RecommendationList {
    let user = model.vectorize_history(profile, items);
    let seen: HashSet<&str> = profile.history.iter().map(|e| e.item.as_str()).collect();
    let mut scored: Vec<ScoredItem> = items
        .values()
        .filter(|i| !seen.contains(i.item_id.as_str()))
        .map(|i| {
            let s = cosine(&user, &model.vectorize_item(i)).max(0.0);
            ScoredItem::new(i.item_id.clone(), s * scale.factor())
        })
        .collect();
    scored.sort_by(|a, b| {
        b.rec_score
            .total_cmp(&a.rec_score)
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    RecommendationList { items: scored }
}
