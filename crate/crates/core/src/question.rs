//! Choosing the next elicitation question by information gain.
//!
//! Candidates are weighted uniformly. Splitting `n` candidates on whether
//! they carry a feature (`x` do, `y = n - x` don't) gains
//!
//! `IG = log2 n - (x/n) log2 x - (y/n) log2 y`
//!
//! bits, i.e. the entropy of a uniform pick over `n` items minus the
//! expected entropy left after the answer.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::{FeatureKey, ItemProfile, Polarity};
use crate::error::QuestionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationQuestion {
    pub feature: FeatureKey,
    /// Bits.
    pub gain: f64,
    pub candidate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Indifferent,
}

/// `m * log2 m`, with `0 log 0 = 0`.
fn mlog2m(m: usize) -> f64 {
    if m == 0 {
        0.0
    } else {
        let m = m as f64;
        m * m.log2()
    }
}

/// Gain of splitting `n` uniformly weighted candidates into `x` and `n - x`.
pub fn split_gain(n: usize, x: usize) -> f64 {
    debug_assert!(x <= n && n > 0);
    if x == 0 || x == n {
        return 0.0;
    }
    let nf = n as f64;
    let gain = nf.log2() - (mlog2m(x) + mlog2m(n - x)) / nf;
    gain.max(0.0)
}

pub fn information_gain(candidates: &[ItemProfile], feature: &FeatureKey) -> Result<f64, QuestionError> {
    if candidates.is_empty() {
        return Err(QuestionError::EmptyCandidates);
    }
    let x = candidates.iter().filter(|c| c.has_feature(feature)).count();
    Ok(split_gain(candidates.len(), x))
}

/// Highest-gain feature among the candidates, skipping `exclude`. Ties go to
/// the smaller feature key. `None` when nothing splits the candidates.
pub fn select_question_feature(
    candidates: &[ItemProfile],
    exclude: &HashSet<FeatureKey>,
) -> Option<ElicitationQuestion> {
    let n = candidates.len();
    if n < 2 {
        return None;
    }
    let features: BTreeSet<FeatureKey> = candidates
        .iter()
        .flat_map(ItemProfile::feature_keys)
        .filter(|k| !exclude.contains(k))
        .collect();
    let mut best: Option<ElicitationQuestion> = None;
    // BTreeSet iterates in ascending key order, so strict `>` keeps the
    // smallest key among equal gains.
    for feature in features {
        let x = candidates.iter().filter(|c| c.has_feature(&feature)).count();
        if x == 0 || x == n {
            continue;
        }
        let gain = split_gain(n, x);
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(ElicitationQuestion {
                feature,
                gain,
                candidate_count: n,
            });
        }
    }
    best.filter(|q| q.gain > 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnswerOutcome {
    pub candidates: Vec<ItemProfile>,
    /// Preference implied by the answer, if any.
    pub polarity: Option<Polarity>,
}

/// Filters the candidates by the answer. `Yes` keeps items with the feature,
/// `No` keeps items without it, `Indifferent` keeps everything.
///
/// When the filter would drop every candidate the list is left alone and
/// [`QuestionError::WouldEmptyCandidates`] carries the preference instead.
pub fn apply_answer(
    candidates: &[ItemProfile],
    feature: &FeatureKey,
    answer: Answer,
) -> Result<AnswerOutcome, QuestionError> {
    if !candidates.iter().any(|c| c.has_feature(feature)) {
        return Err(QuestionError::UnknownFeature(feature.to_string()));
    }
    let (keep_with, polarity) = match answer {
        Answer::Indifferent => {
            return Ok(AnswerOutcome {
                candidates: candidates.to_vec(),
                polarity: None,
            })
        }
        Answer::Yes => (true, Polarity::Like),
        Answer::No => (false, Polarity::Dislike),
    };
    let kept: Vec<ItemProfile> = candidates
        .iter()
        .filter(|c| c.has_feature(feature) == keep_with)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(QuestionError::WouldEmptyCandidates { polarity });
    }
    Ok(AnswerOutcome {
        candidates: kept,
        polarity: Some(polarity),
    })
}
