//! Finite-state dialogue policy.
//!
//! Maps a classified utterance and the current state to the actions the
//! service should execute. The policy itself never calls out; the caller
//! executes [`Action::Recommend`], stores the resulting list with
//! [`DialogueState::show_list`] and then asks [`Policy::after_recommend`]
//! whether to follow up with an elicitation question.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dialogue::nlu::{NluResult, FALLBACK_INTENT};
use crate::domain::{FeatureKey, ItemProfile, Polarity, RecommendationList};
use crate::error::DialogueError;
use crate::question::{select_question_feature, Answer, ElicitationQuestion};

pub mod intents {
    pub const GET_RECOMMENDATIONS: &str = "get_recommendations";
    pub const EXPLAIN_ITEM: &str = "explain_item";
    pub const SHOW_PROFILE: &str = "show_profile";
    pub const ITEM_DETAILS: &str = "item_details";
    pub const LIKE_FEATURE: &str = "like_feature";
    pub const DISLIKE_FEATURE: &str = "dislike_feature";
    pub const LIKE_ITEM: &str = "like_item";
    pub const DISLIKE_ITEM: &str = "dislike_item";
    pub const ANSWER_YES: &str = "answer_yes";
    pub const ANSWER_NO: &str = "answer_no";
    pub const ANSWER_INDIFFERENT: &str = "answer_indifferent";
    pub const END_SESSION: &str = "end_session";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "question", rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Recommending,
    AwaitingAnswer(ElicitationQuestion),
    Ended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub phase: Phase,
    pub candidates: RecommendationList,
    pub asked: BTreeSet<FeatureKey>,
    pub turn_count: u32,
    pub last_list_shown: Option<RecommendationList>,
}

impl Default for DialogueState {
    fn default() -> Self {
        Self {
            phase: Phase::Idle,
            candidates: RecommendationList::default(),
            asked: BTreeSet::new(),
            turn_count: 0,
            last_list_shown: None,
        }
    }
}

impl DialogueState {
    /// Records a list presented to the user; it becomes both the candidate
    /// set and the target of ordinal references.
    pub fn show_list(&mut self, list: RecommendationList) {
        self.candidates = list.clone();
        self.last_list_shown = Some(list);
    }

    pub fn pending_question(&self) -> Option<&ElicitationQuestion> {
        match &self.phase {
            Phase::AwaitingAnswer(q) => Some(q),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Recommend,
    AskQuestion {
        question: ElicitationQuestion,
    },
    Explain {
        item_id: String,
    },
    ShowProfile,
    ItemDetails {
        item_id: String,
    },
    RecordFeaturePref {
        feature: FeatureKey,
        polarity: Polarity,
    },
    RecordItemPref {
        item_id: String,
        polarity: Polarity,
    },
    ApplyAnswer {
        feature: FeatureKey,
        answer: Answer,
    },
    CloseSession,
    /// `unrecognized` distinguishes an utterance nobody understood from one
    /// that made no sense in the current phase.
    Help {
        unrecognized: bool,
    },
    /// Anything said after the session ended.
    SessionEnded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Minimum candidate count that triggers a proactive question.
    pub ask_threshold: usize,
    pub item_entity: String,
    pub ordinal_entity: String,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            ask_threshold: 5,
            item_entity: "item".into(),
            ordinal_entity: "ordinal".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Policy {
    cfg: PolicyConfig,
}

impl Policy {
    pub fn new(cfg: PolicyConfig) -> Self {
        Self { cfg }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    /// Resolves the item an utterance talks about: an item entity names the
    /// item directly, an ordinal indexes the last list shown (1-based,
    /// `last` for the final entry).
    pub fn resolve_item(&self, state: &DialogueState, nlu: &NluResult) -> Result<String, DialogueError> {
        if let Some(item) = nlu.first_entity_of(&self.cfg.item_entity) {
            return Ok(item.value.clone());
        }
        let ordinal = nlu
            .first_entity_of(&self.cfg.ordinal_entity)
            .ok_or_else(|| DialogueError::UnknownItemReference(String::new()))?;
        let list = state
            .last_list_shown
            .as_ref()
            .ok_or_else(|| DialogueError::UnknownItemReference(ordinal.span.clone()))?;
        let index = match ordinal.value.as_str() {
            "last" => list.len().checked_sub(1),
            n => n.parse::<usize>().ok().and_then(|n| n.checked_sub(1)),
        };
        index
            .and_then(|i| list.items.get(i))
            .map(|it| it.item_id.clone())
            .ok_or_else(|| DialogueError::UnknownItemReference(ordinal.span.clone()))
    }

    /// First entity that is neither an item nor an ordinal, as a feature.
    fn feature_entity(&self, nlu: &NluResult) -> Option<FeatureKey> {
        nlu.entities
            .iter()
            .filter(|e| e.entity_type != self.cfg.item_entity && e.entity_type != self.cfg.ordinal_entity)
            .find_map(|e| FeatureKey::parse(&format!("{}={}", e.entity_type, e.value)).ok())
    }

    pub fn next_action(
        &self,
        state: &DialogueState,
        nlu: &NluResult,
    ) -> Result<(Vec<Action>, DialogueState), DialogueError> {
        use intents::*;

        let mut next = state.clone();
        next.turn_count = state.turn_count.saturating_add(1);

        if state.phase == Phase::Ended {
            return Ok((vec![Action::SessionEnded], next));
        }

        let help = |unrecognized| Action::Help { unrecognized };
        let action = match nlu.intent.as_str() {
            GET_RECOMMENDATIONS => {
                next.phase = Phase::Recommending;
                Action::Recommend
            }
            EXPLAIN_ITEM => Action::Explain {
                item_id: self.resolve_item(state, nlu)?,
            },
            SHOW_PROFILE => Action::ShowProfile,
            ITEM_DETAILS => Action::ItemDetails {
                item_id: self.resolve_item(state, nlu)?,
            },
            LIKE_FEATURE | DISLIKE_FEATURE => match self.feature_entity(nlu) {
                Some(feature) => Action::RecordFeaturePref {
                    feature,
                    polarity: if nlu.intent == LIKE_FEATURE {
                        Polarity::Like
                    } else {
                        Polarity::Dislike
                    },
                },
                None => help(true),
            },
            LIKE_ITEM | DISLIKE_ITEM => Action::RecordItemPref {
                item_id: self.resolve_item(state, nlu)?,
                polarity: if nlu.intent == LIKE_ITEM {
                    Polarity::Like
                } else {
                    Polarity::Dislike
                },
            },
            ANSWER_YES | ANSWER_NO | ANSWER_INDIFFERENT => match state.pending_question() {
                Some(q) => {
                    let answer = match nlu.intent.as_str() {
                        ANSWER_YES => Answer::Yes,
                        ANSWER_NO => Answer::No,
                        _ => Answer::Indifferent,
                    };
                    next.phase = Phase::Recommending;
                    Action::ApplyAnswer {
                        feature: q.feature.clone(),
                        answer,
                    }
                }
                None => help(false),
            },
            END_SESSION => {
                next.phase = Phase::Ended;
                Action::CloseSession
            }
            FALLBACK_INTENT => help(true),
            _ => help(false),
        };
        Ok((vec![action], next))
    }

    /// Proactive elicitation after a list was presented: with enough
    /// candidates and an informative feature left, ask about it.
    pub fn after_recommend(
        &self,
        state: &DialogueState,
        candidates: &[ItemProfile],
    ) -> (Option<Action>, DialogueState) {
        let mut next = state.clone();
        if state.phase != Phase::Recommending || candidates.len() < self.cfg.ask_threshold {
            return (None, next);
        }
        let exclude = state.asked.iter().cloned().collect();
        match select_question_feature(candidates, &exclude) {
            Some(question) => {
                next.asked.insert(question.feature.clone());
                next.phase = Phase::AwaitingAnswer(question.clone());
                (Some(Action::AskQuestion { question }), next)
            }
            None => (None, next),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::nlu::EntityMatch;
    use crate::domain::{Feature, ScoredItem};

    fn nlu(intent: &str, entities: &[(&str, &str)]) -> NluResult {
        NluResult {
            intent: intent.into(),
            confidence: 1.0,
            entities: entities
                .iter()
                .map(|(t, v)| EntityMatch {
                    entity_type: (*t).into(),
                    value: (*v).into(),
                    span: (*v).into(),
                })
                .collect(),
        }
    }

    fn list(ids: &[&str]) -> RecommendationList {
        RecommendationList::new(ids.iter().map(|i| ScoredItem::new(*i, 1.0)).collect()).unwrap()
    }

    fn six_diverse() -> Vec<ItemProfile> {
        ["comedy", "comedy", "drama", "drama", "horror", "action"]
            .iter()
            .enumerate()
            .map(|(i, g)| {
                ItemProfile::new(
                    format!("m{i}"),
                    format!("M{i}"),
                    vec![Feature::new("genre", g).unwrap()],
                )
            })
            .collect()
    }

    #[test]
    fn idle_recommend() {
        let p = Policy::default();
        let (actions, s) = p
            .next_action(&DialogueState::default(), &nlu("get_recommendations", &[]))
            .unwrap();
        assert_eq!(actions, vec![Action::Recommend]);
        assert_eq!(s.phase, Phase::Recommending);
        assert_eq!(s.turn_count, 1);
    }

    #[test]
    fn recommend_then_ask_with_enough_candidates() {
        let p = Policy::default();
        let items = six_diverse();
        let mut state = DialogueState {
            phase: Phase::Recommending,
            ..DialogueState::default()
        };
        state.show_list(list(&items.iter().map(|i| i.item_id.as_str()).collect::<Vec<_>>()));
        let (actions, s) = p.next_action(&state, &nlu("get_recommendations", &[])).unwrap();
        assert_eq!(actions, vec![Action::Recommend]);
        let (ask, s) = p.after_recommend(&s, &items);
        match ask {
            Some(Action::AskQuestion { question }) => {
                // comedy and drama both split 2/4 of 6; the smaller key wins
                assert_eq!(question.feature.as_str(), "genre=comedy");
                assert!(question.gain > 0.0);
                assert!(s.asked.contains(&question.feature));
            }
            other => panic!("expected a question, got {other:?}"),
        }
        assert!(matches!(s.phase, Phase::AwaitingAnswer(_)));
    }

    #[test]
    fn no_question_below_threshold() {
        let p = Policy::default();
        let state = DialogueState {
            phase: Phase::Recommending,
            ..DialogueState::default()
        };
        let (ask, s) = p.after_recommend(&state, &six_diverse()[..4]);
        assert!(ask.is_none());
        assert_eq!(s.phase, Phase::Recommending);
    }

    #[test]
    fn answers_outside_question_get_help() {
        let p = Policy::default();
        let (actions, s) = p
            .next_action(&DialogueState::default(), &nlu("answer_yes", &[]))
            .unwrap();
        assert_eq!(actions, vec![Action::Help { unrecognized: false }]);
        assert_eq!(s.phase, Phase::Idle);
    }

    #[test]
    fn answer_consumes_question() {
        let p = Policy::default();
        let q = ElicitationQuestion {
            feature: FeatureKey::parse("genre=comedy").unwrap(),
            gain: 1.0,
            candidate_count: 4,
        };
        let state = DialogueState {
            phase: Phase::AwaitingAnswer(q.clone()),
            ..DialogueState::default()
        };
        let (actions, s) = p.next_action(&state, &nlu("answer_no", &[])).unwrap();
        assert_eq!(
            actions,
            vec![Action::ApplyAnswer {
                feature: q.feature,
                answer: Answer::No
            }]
        );
        assert_eq!(s.phase, Phase::Recommending);
    }

    #[test]
    fn ordinals_resolve_against_last_list() {
        let p = Policy::default();
        let mut state = DialogueState::default();
        assert!(matches!(
            p.next_action(&state, &nlu("explain_item", &[("ordinal", "1")])),
            Err(DialogueError::UnknownItemReference(_))
        ));
        state.show_list(list(&["a", "b", "c"]));
        let (actions, _) = p
            .next_action(&state, &nlu("explain_item", &[("ordinal", "2")]))
            .unwrap();
        assert_eq!(actions, vec![Action::Explain { item_id: "b".into() }]);
        let (actions, _) = p
            .next_action(&state, &nlu("item_details", &[("ordinal", "last")]))
            .unwrap();
        assert_eq!(actions, vec![Action::ItemDetails { item_id: "c".into() }]);
        assert!(p
            .next_action(&state, &nlu("explain_item", &[("ordinal", "9")]))
            .is_err());
        let (actions, _) = p.next_action(&state, &nlu("like_item", &[("item", "zz")])).unwrap();
        assert_eq!(
            actions,
            vec![Action::RecordItemPref {
                item_id: "zz".into(),
                polarity: Polarity::Like
            }]
        );
    }

    #[test]
    fn feature_preferences() {
        let p = Policy::default();
        let (actions, _) = p
            .next_action(
                &DialogueState::default(),
                &nlu("dislike_feature", &[("genre", "horror")]),
            )
            .unwrap();
        assert_eq!(
            actions,
            vec![Action::RecordFeaturePref {
                feature: FeatureKey::parse("genre=horror").unwrap(),
                polarity: Polarity::Dislike
            }]
        );
        let (actions, _) = p
            .next_action(&DialogueState::default(), &nlu("like_feature", &[]))
            .unwrap();
        assert_eq!(actions, vec![Action::Help { unrecognized: true }]);
    }

    #[test]
    fn ended_sessions_stay_ended() {
        let p = Policy::default();
        let (actions, s) = p
            .next_action(&DialogueState::default(), &nlu("end_session", &[]))
            .unwrap();
        assert_eq!(actions, vec![Action::CloseSession]);
        assert_eq!(s.phase, Phase::Ended);
        for intent in ["get_recommendations", "answer_yes", "end_session", FALLBACK_INTENT] {
            let (actions, s2) = p.next_action(&s, &nlu(intent, &[])).unwrap();
            assert_eq!(actions, vec![Action::SessionEnded]);
            assert_eq!(s2.phase, Phase::Ended);
        }
    }

    #[test]
    fn fallback_is_help() {
        let (actions, _) = Policy::default()
            .next_action(&DialogueState::default(), &nlu(FALLBACK_INTENT, &[]))
            .unwrap();
        assert_eq!(actions, vec![Action::Help { unrecognized: true }]);
    }
}
