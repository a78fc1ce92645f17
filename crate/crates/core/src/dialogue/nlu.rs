//! Deterministic intent and entity recognition driven by a workspace file.
//!
//! Utterances are lower-cased, apostrophes dropped and every other
//! non-alphanumeric character turned into a space. Entities are found by
//! longest synonym match, left to right, and replaced by a `{type}` slot
//! before intent patterns are tried in workspace order.
//!
//! Pattern tokens:
//! - `word`: literal token
//! - `stem*`: any token starting with `stem`
//! - `*`: zero or more tokens
//! - `{type}`: one entity of that type
//!
//! A pattern matches when it matches a contiguous run of the utterance.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::DialogueError;

pub const FALLBACK_INTENT: &str = "fallback";

/// Below this share of a pattern's content words an overlap is ignored.
const MIN_OVERLAP: f64 = 0.5;
/// Partial matches never reach the confidence of an exact one.
const PARTIAL_CEILING: f64 = 0.9;

const STOP_WORDS: &[&str] = &[
    "a", "an", "and", "for", "i", "im", "is", "it", "me", "my", "of", "one", "please", "so", "that", "the", "this",
    "to", "you",
];

/// Intents with trigger patterns, and entity types with canonical values
/// and their synonyms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub intents: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub entities: IndexMap<String, IndexMap<String, Vec<String>>>,
}

impl Workspace {
    pub fn from_json(raw: &[u8]) -> Result<Self, DialogueError> {
        let ws: Workspace = serde_json::from_slice(raw).map_err(|e| DialogueError::InvalidWorkspace(e.to_string()))?;
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        for (name, patterns) in &self.intents {
            if name == FALLBACK_INTENT {
                return Err(DialogueError::InvalidWorkspace(format!(
                    "`{FALLBACK_INTENT}` is reserved"
                )));
            }
            if patterns.is_empty() || patterns.iter().any(|p| p.trim().is_empty()) {
                return Err(DialogueError::InvalidWorkspace(format!(
                    "intent `{name}` has an empty pattern list or pattern"
                )));
            }
        }
        Ok(())
    }

    /// Adds synonyms for a canonical value, creating the type and value as
    /// needed. The canonical value itself always counts as a synonym.
    pub fn add_synonyms<I, S>(&mut self, entity_type: &str, canonical: &str, synonyms: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let values = self.entities.entry(entity_type.to_owned()).or_default();
        let list = values.entry(canonical.to_owned()).or_default();
        for s in std::iter::once(canonical.to_owned()).chain(synonyms.into_iter().map(Into::into)) {
            if !list.contains(&s) {
                list.push(s);
            }
        }
    }
}

pub fn normalize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|c| *c != '\'' && *c != '\u{2019}')
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMatch {
    pub entity_type: String,
    pub value: String,
    /// The normalized words that matched.
    pub span: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NluResult {
    pub intent: String,
    pub confidence: f64,
    pub entities: Vec<EntityMatch>,
}

impl NluResult {
    pub fn is_fallback(&self) -> bool {
        self.intent == FALLBACK_INTENT
    }

    pub fn first_entity_of(&self, entity_type: &str) -> Option<&EntityMatch> {
        self.entities.iter().find(|e| e.entity_type == entity_type)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PatternToken {
    Literal(String),
    Prefix(String),
    Glob,
    Slot(String),
}

impl PatternToken {
    fn matches(&self, tok: &Token) -> bool {
        match (self, tok) {
            (PatternToken::Literal(l), Token::Word(w)) => l == w,
            (PatternToken::Prefix(p), Token::Word(w)) => w.starts_with(p.as_str()),
            (PatternToken::Slot(s), Token::Slot(t)) => s == t,
            _ => false,
        }
    }

    /// Content words used for partial scoring.
    fn is_content(&self) -> bool {
        match self {
            PatternToken::Literal(w) => !STOP_WORDS.contains(&w.as_str()),
            PatternToken::Prefix(_) | PatternToken::Slot(_) => true,
            PatternToken::Glob => false,
        }
    }
}

fn compile_pattern(pattern: &str) -> Vec<PatternToken> {
    let mut out = Vec::new();
    for raw in pattern.split_whitespace() {
        let lower = raw.to_lowercase();
        if lower == "*" {
            out.push(PatternToken::Glob);
        } else if lower.len() > 2 && lower.starts_with('{') && lower.ends_with('}') {
            out.push(PatternToken::Slot(lower[1..lower.len() - 1].to_owned()));
        } else if let Some(stem) = lower.strip_suffix('*') {
            let mut words = normalize(stem);
            if let Some(last) = words.pop() {
                out.extend(words.into_iter().map(PatternToken::Literal));
                out.push(PatternToken::Prefix(last));
            }
        } else {
            out.extend(normalize(&lower).into_iter().map(PatternToken::Literal));
        }
    }
    out
}

/// Anchored match of `pat` against a prefix of `toks`.
fn match_from(pat: &[PatternToken], toks: &[Token]) -> bool {
    match pat.split_first() {
        None => true,
        Some((PatternToken::Glob, rest)) => (0..=toks.len()).any(|skip| match_from(rest, &toks[skip..])),
        Some((p, rest)) => toks
            .split_first()
            .is_some_and(|(t, tail)| p.matches(t) && match_from(rest, tail)),
    }
}

fn matches_anywhere(pat: &[PatternToken], toks: &[Token]) -> bool {
    !pat.is_empty() && (0..=toks.len()).any(|start| match_from(pat, &toks[start..]))
}

fn overlap(pat: &[PatternToken], toks: &[Token]) -> f64 {
    let content: Vec<&PatternToken> = pat.iter().filter(|p| p.is_content()).collect();
    if content.is_empty() {
        return 0.0;
    }
    let hit = content.iter().filter(|p| toks.iter().any(|t| p.matches(t))).count();
    hit as f64 / content.len() as f64
}

struct Synonym {
    words: Vec<String>,
    entity_type: String,
    value: String,
}

/// A workspace compiled for classification.
pub struct Classifier {
    intents: Vec<(String, Vec<Vec<PatternToken>>)>,
    synonyms: Vec<Synonym>,
}

impl Classifier {
    pub fn new(ws: &Workspace) -> Self {
        let intents = ws
            .intents
            .iter()
            .map(|(name, pats)| {
                let compiled = pats
                    .iter()
                    .map(|p| compile_pattern(p))
                    .filter(|p| !p.is_empty())
                    .collect();
                (name.clone(), compiled)
            })
            .collect();
        let mut seen = HashSet::new();
        let mut synonyms: Vec<Synonym> = Vec::new();
        for (ty, values) in &ws.entities {
            for (canonical, syns) in values {
                for s in std::iter::once(canonical).chain(syns) {
                    let words = normalize(s);
                    if words.is_empty() || !seen.insert((words.clone(), ty.clone())) {
                        continue;
                    }
                    synonyms.push(Synonym {
                        words,
                        entity_type: ty.clone(),
                        value: canonical.clone(),
                    });
                }
            }
        }
        // Longest first; the stable sort keeps workspace order among equals.
        synonyms.sort_by_key(|s| std::cmp::Reverse(s.words.len()));
        Self { intents, synonyms }
    }

    fn extract(&self, words: &[String]) -> (Vec<Token>, Vec<EntityMatch>) {
        let mut tokens = Vec::with_capacity(words.len());
        let mut entities = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let hit = self.synonyms.iter().find(|s| words[i..].starts_with(&s.words));
            match hit {
                Some(s) => {
                    tokens.push(Token::Slot(s.entity_type.clone()));
                    entities.push(EntityMatch {
                        entity_type: s.entity_type.clone(),
                        value: s.value.clone(),
                        span: s.words.join(" "),
                    });
                    i += s.words.len();
                }
                None => {
                    tokens.push(Token::Word(words[i].clone()));
                    i += 1;
                }
            }
        }
        (tokens, entities)
    }

    /// Never fails; unrecognized input yields the fallback intent.
    pub fn classify(&self, utterance: &str) -> NluResult {
        let words = normalize(utterance);
        let (tokens, entities) = self.extract(&words);

        for (name, patterns) in &self.intents {
            if patterns.iter().any(|p| matches_anywhere(p, &tokens)) {
                return NluResult {
                    intent: name.clone(),
                    confidence: 1.0,
                    entities,
                };
            }
        }

        let mut best: Option<(&str, f64)> = None;
        for (name, patterns) in &self.intents {
            let score = patterns.iter().map(|p| overlap(p, &tokens)).fold(0.0, f64::max);
            if score >= MIN_OVERLAP && best.is_none_or(|(_, b)| score > b) {
                best = Some((name, score));
            }
        }
        match best {
            Some((name, score)) => NluResult {
                intent: name.to_owned(),
                confidence: score * PARTIAL_CEILING,
                entities,
            },
            None => NluResult {
                intent: FALLBACK_INTENT.to_owned(),
                confidence: 0.0,
                entities,
            },
        }
    }
}

pub fn classify(utterance: &str, ws: &Workspace) -> NluResult {
    Classifier::new(ws).classify(utterance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws() -> Workspace {
        serde_json::from_str(
            r#"{
                "intents": {
                    "dislike_feature": ["i dont like {genre}", "no more {genre}"],
                    "like_feature": ["i love {genre}", "i like {genre}"],
                    "get_recommendations": ["recommend*", "suggest *"],
                    "explain_item": ["why * {ordinal}"],
                    "answer_no": ["no"]
                },
                "entities": {
                    "genre": {"comedy": ["comedy", "comedies"], "science fiction": ["sci-fi", "science fiction"]},
                    "ordinal": {"1": ["first", "1st"], "2": ["second"]}
                }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn exact_pattern_with_prefix_wildcard() {
        let r = classify("recommend me something", &ws());
        assert_eq!(r.intent, "get_recommendations");
        assert_eq!(r.confidence, 1.0);
        assert!(r.entities.is_empty());
    }

    #[test]
    fn entity_substitution_then_pattern() {
        let r = classify("I love comedy movies", &ws());
        assert_eq!(r.intent, "like_feature");
        assert_eq!(r.confidence, 1.0);
        assert_eq!(
            r.entities,
            vec![EntityMatch {
                entity_type: "genre".into(),
                value: "comedy".into(),
                span: "comedy".into()
            }]
        );
    }

    #[test]
    fn unmatched_is_fallback() {
        let r = classify("asdf qwerty", &ws());
        assert_eq!(r.intent, FALLBACK_INTENT);
        assert_eq!(r.confidence, 0.0);
        assert!(r.entities.is_empty());
        assert!(classify("", &ws()).is_fallback());
    }

    #[test]
    fn longest_synonym_wins_and_punctuation_is_ignored() {
        let r = classify("I don't like Sci-Fi!", &ws());
        assert_eq!(r.intent, "dislike_feature");
        assert_eq!(r.entities[0].value, "science fiction");
        assert_eq!(r.entities[0].span, "sci fi");
    }

    #[test]
    fn workspace_order_decides_between_matches() {
        // "no more comedies" matches dislike_feature before answer_no.
        assert_eq!(classify("no more comedies", &ws()).intent, "dislike_feature");
        assert_eq!(classify("no", &ws()).intent, "answer_no");
    }

    #[test]
    fn glob_spans_words() {
        let r = classify("why did you pick the first one?", &ws());
        assert_eq!(r.intent, "explain_item");
        assert_eq!(r.first_entity_of("ordinal").unwrap().value, "1");
    }

    #[test]
    fn partial_overlap_scores_below_one() {
        // "love comedy" shares both content tokens of "i love {genre}" but
        // does not match it contiguously with the extra word in between.
        let r = classify("love really comedy", &ws());
        assert_eq!(r.intent, "like_feature");
        assert!(r.confidence > 0.0 && r.confidence < 1.0, "{}", r.confidence);
    }

    #[test]
    fn workspace_validation() {
        assert!(Workspace::from_json(br#"{"intents":{"a":[]}}"#).is_err());
        assert!(Workspace::from_json(br#"{"intents":{"fallback":["x"]}}"#).is_err());
        assert!(Workspace::from_json(b"[").is_err());
    }

    #[test]
    fn added_synonyms_are_recognized() {
        let mut w = ws();
        w.add_synonyms("item", "m42", ["The Long Goodbye"]);
        let r = classify("tell me about the long goodbye", &w);
        assert_eq!(r.first_entity_of("item").unwrap().value, "m42");
    }
}
