use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use irf_core::{
    information_gain, rerank as rerank_list, select_question_feature, ElicitationQuestion, FeatureKey, ItemProfile,
    PreferenceManager, PreferenceStore, RecommendationList, RerankConfig, ScoredItem, TfIdfModel, UpmConfig, Weights,
};
use serde::{Deserialize, Serialize};

const SECONDS_PER_DAY: i64 = 86_400;

fn parse_weights(raw: &BTreeMap<String, f64>) -> Result<Weights, String> {
    raw.iter()
        .filter(|(_, w)| **w != 0.0)
        .map(|(k, w)| {
            let key = FeatureKey::parse(k).map_err(|e| e.to_string())?;
            if !(-1.0..=1.0).contains(w) {
                return Err(format!("weight for {k} must be in [-1, 1], got {w}"));
            }
            Ok((key, *w))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
pub struct RerankInput {
    pub catalog: Vec<ItemProfile>,
    /// Upstream list, in upstream order.
    pub scores: Vec<ScoredItem>,
    #[serde(default)]
    pub preferences: BTreeMap<String, f64>,
    pub alpha: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct RankedRow {
    pub rank: usize,
    pub upstream_rank: usize,
    pub item_id: String,
    pub title: String,
    pub rec_score: f64,
    pub final_score: f64,
}

pub fn rerank(input: RerankInput) -> Result<Vec<RankedRow>, String> {
    let cfg = RerankConfig::new(input.alpha).map_err(|e| e.to_string())?;
    let model = TfIdfModel::build(&input.catalog).map_err(|e| e.to_string())?;
    let prefs = model.vectorize_preferences(&parse_weights(&input.preferences)?);
    let by_id: HashMap<&str, &ItemProfile> = input.catalog.iter().map(|i| (i.item_id.as_str(), i)).collect();
    let vecs = input
        .catalog
        .iter()
        .map(|i| (i.item_id.clone(), model.vectorize_item(i)))
        .collect();
    let list = RecommendationList::new(input.scores).map_err(|e| e.to_string())?;
    let upstream: HashMap<&str, usize> = list.item_ids().enumerate().map(|(i, id)| (id, i + 1)).collect();
    let ranked = rerank_list(&list, &prefs, &vecs, cfg);
    Ok(ranked
        .items
        .iter()
        .enumerate()
        .map(|(i, it)| RankedRow {
            rank: i + 1,
            upstream_rank: upstream[it.item_id.as_str()],
            item_id: it.item_id.clone(),
            title: by_id
                .get(it.item_id.as_str())
                .map_or_else(|| it.item_id.clone(), |p| p.title.clone()),
            rec_score: it.rec_score,
            final_score: it.final_score.unwrap_or(0.0),
        })
        .collect())
}

#[derive(Debug, Deserialize)]
pub struct QuestionInput {
    pub candidates: Vec<ItemProfile>,
    #[serde(default)]
    pub asked: Vec<String>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct FeatureGain {
    pub feature: FeatureKey,
    pub with_feature: usize,
    pub gain: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct QuestionOutput {
    pub question: Option<ElicitationQuestion>,
    /// Every askable feature, best first.
    pub gains: Vec<FeatureGain>,
}

pub fn next_question(input: QuestionInput) -> Result<QuestionOutput, String> {
    let asked: HashSet<FeatureKey> = input
        .asked
        .iter()
        .map(|k| FeatureKey::parse(k).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let features: BTreeSet<FeatureKey> = input.candidates.iter().flat_map(|c| c.feature_keys()).collect();
    let mut gains = Vec::new();
    for f in features.into_iter().filter(|f| !asked.contains(f)) {
        let gain = information_gain(&input.candidates, &f).map_err(|e| e.to_string())?;
        let with_feature = input.candidates.iter().filter(|c| c.has_feature(&f)).count();
        gains.push(FeatureGain {
            feature: f,
            with_feature,
            gain,
        });
    }
    gains.sort_by(|a, b| b.gain.total_cmp(&a.gain).then_with(|| a.feature.cmp(&b.feature)));
    Ok(QuestionOutput {
        question: select_question_feature(&input.candidates, &asked),
        gains,
    })
}

#[derive(Debug, Deserialize)]
pub struct DecayInput {
    pub weight: f64,
    pub lambda: f64,
    pub days: u32,
    #[serde(default = "default_step")]
    pub step: u32,
}

fn default_step() -> u32 {
    1
}

#[derive(Debug, Serialize, PartialEq)]
pub struct DecayPoint {
    pub day: u32,
    /// Zero once the weight has been pruned.
    pub weight: f64,
}

pub fn decay_curve(input: DecayInput) -> Result<Vec<DecayPoint>, String> {
    if input.step == 0 {
        return Err("step must be positive".into());
    }
    let upm = PreferenceManager::new(UpmConfig {
        lambda: input.lambda,
        ..UpmConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let feature = FeatureKey::parse("demo=feature").expect("static key");
    let store = PreferenceStore {
        user_id: "demo".into(),
        weights: parse_weights(&[(feature.to_string(), input.weight)].into())?,
        last_updated: 0,
    };
    (0..=input.days)
        .step_by(input.step as usize)
        .map(|day| {
            let view = upm
                .get_permanent(&store, day as i64 * SECONDS_PER_DAY)
                .map_err(|e| e.to_string())?;
            Ok(DecayPoint {
                day,
                weight: view.weights.get(&feature).copied().unwrap_or(0.0),
            })
        })
        .collect()
}
