//! Sessions and turn handling.
//!
//! A turn classifies the utterance, asks the policy what to do, runs the
//! resulting actions against the upstream services and the preference
//! model, and renders the reply from the message catalog.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use irf_core::dialogue::{Action, Classifier, DialogueState, MessageCatalog, Policy, PolicyConfig, Workspace};
use irf_core::explain::history_weights;
use irf_core::question::AnswerOutcome;
use irf_core::{
    apply_answer, explain, needs_explanation, profile_view, rerank, Answer, DialogueError, ElicitationQuestion,
    FeatureKey, FeatureVector, HistoryEntry, ItemProfile, Polarity, PreferenceManager, PreferenceStore,
    PreferenceTarget, ProfileSource, QuestionError, RecommendationList, SessionProfile, TfIdfModel, Timestamp,
    UserProfile,
};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::clients::{parse_item_list, Upstream, UpstreamError};
use crate::clock::Clock;
use crate::config::GatewayConfig;
use crate::store::{FileStore, StoreError};

/// Message keys the gateway renders. All must exist in the catalog.
pub mod keys {
    pub const REC_HEADER: &str = "rec_header";
    pub const REC_ITEM_LINE: &str = "rec_item_line";
    pub const REC_REASON: &str = "rec_reason";
    pub const REC_REASON_NONE: &str = "rec_reason_none";
    pub const REC_EMPTY: &str = "rec_empty";
    pub const EXPLAIN_HEADER: &str = "explain_header";
    pub const EXPLAIN_LINE: &str = "explain_line";
    pub const EXPLAIN_NONE: &str = "explain_none";
    pub const PROFILE_HEADER: &str = "profile_header";
    pub const PROFILE_LINE: &str = "profile_line";
    pub const PROFILE_EMPTY: &str = "profile_empty";
    pub const SOURCE_HISTORY: &str = "source_history";
    pub const SOURCE_STATED: &str = "source_stated";
    pub const SOURCE_BOTH: &str = "source_both";
    pub const ITEM_DETAILS: &str = "item_details";
    pub const ITEM_FEATURES: &str = "item_features";
    pub const FEATURE_LABEL: &str = "feature_label";
    pub const LIST_SEPARATOR: &str = "list_separator";
    pub const ASK_QUESTION: &str = "ask_question";
    pub const ACK_PREFERENCE: &str = "ack_preference";
    pub const STANCE_LIKE: &str = "stance_like";
    pub const STANCE_DISLIKE: &str = "stance_dislike";
    pub const ANSWER_NOTED: &str = "answer_noted";
    pub const ANSWER_SKIPPED: &str = "answer_skipped";
    pub const HELP: &str = "help";
    pub const GOODBYE: &str = "goodbye";
    pub const FALLBACK: &str = "fallback";
    pub const SESSION_ENDED: &str = "session_ended";
    pub const SERVICE_UNAVAILABLE: &str = "service_unavailable";
    pub const ITEM_UNKNOWN: &str = "item_unknown";
    pub const ERROR_GENERIC: &str = "error_generic";

    pub const ALL: &[&str] = &[
        REC_HEADER,
        REC_ITEM_LINE,
        REC_REASON,
        REC_REASON_NONE,
        REC_EMPTY,
        EXPLAIN_HEADER,
        EXPLAIN_LINE,
        EXPLAIN_NONE,
        PROFILE_HEADER,
        PROFILE_LINE,
        PROFILE_EMPTY,
        SOURCE_HISTORY,
        SOURCE_STATED,
        SOURCE_BOTH,
        ITEM_DETAILS,
        ITEM_FEATURES,
        FEATURE_LABEL,
        LIST_SEPARATOR,
        ASK_QUESTION,
        ACK_PREFERENCE,
        STANCE_LIKE,
        STANCE_DISLIKE,
        ANSWER_NOTED,
        ANSWER_SKIPPED,
        HELP,
        GOODBYE,
        FALLBACK,
        SESSION_ENDED,
        SERVICE_UNAVAILABLE,
        ITEM_UNKNOWN,
        ERROR_GENERIC,
    ];
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("unknown session `{0}`")]
    SessionNotFound(String),
    #[error("unknown user `{0}`")]
    UserNotFound(String),
    #[error(transparent)]
    Upstream(#[from] UpstreamError),
    #[error("persistence failure: {0}")]
    Persistence(#[from] StoreError),
    #[error("setup: {0}")]
    Setup(String),
}

/// What a turn sends back to the client.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reply {
    pub reply: String,
    pub payload_type: Option<String>,
    pub payload: Value,
}

impl Reply {
    fn text(reply: String) -> Self {
        Self {
            reply,
            payload_type: None,
            payload: Value::Null,
        }
    }

    fn with(reply: String, payload_type: &str, payload: Value) -> Self {
        Self {
            reply,
            payload_type: Some(payload_type.to_owned()),
            payload,
        }
    }
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub user_id: String,
    pub state: DialogueState,
    pub profile: SessionProfile,
    pub created_at: Timestamp,
    /// Upstream list the current candidates come from, as received.
    upstream: RecommendationList,
    user: Option<UserProfile>,
    history_vec: Option<FeatureVector>,
    /// Set once the session has been merged into the permanent store.
    merged: Option<usize>,
}

#[derive(Debug, Clone)]
struct CachedItem {
    profile: ItemProfile,
    vector: FeatureVector,
}

/// Why a turn could not be completed.
#[derive(Debug)]
enum TurnError {
    Upstream(UpstreamError),
    ItemUnknown,
    Other(String),
}

impl From<UpstreamError> for TurnError {
    fn from(e: UpstreamError) -> Self {
        match e {
            UpstreamError::NotFound(_) => TurnError::ItemUnknown,
            other => TurnError::Upstream(other),
        }
    }
}

impl From<DialogueError> for TurnError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::UnknownItemReference(_) => TurnError::ItemUnknown,
            other => TurnError::Other(other.to_string()),
        }
    }
}

type Slots<'a> = HashMap<&'a str, String>;

fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn fmt4(x: f64) -> String {
    format!("{:.4}", round4(x))
}

pub struct Gateway {
    cfg: GatewayConfig,
    upstream: Upstream,
    model: TfIdfModel,
    items: RwLock<HashMap<String, CachedItem>>,
    classifier: Classifier,
    policy: Policy,
    catalog: MessageCatalog,
    upm: PreferenceManager,
    store: FileStore,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    clock: Arc<dyn Clock>,
}

/// Adds every corpus feature value as an entity of its category and every
/// title as an `item` entity naming the item id.
pub fn augment_workspace(ws: &mut Workspace, corpus: &[ItemProfile], item_entity: &str) {
    for item in corpus {
        for f in item.features() {
            ws.add_synonyms(f.category(), f.value(), std::iter::empty::<String>());
        }
        if !item.title.trim().is_empty() {
            ws.add_synonyms(item_entity, &item.item_id, [item.title.to_lowercase()]);
        }
    }
}

impl Gateway {
    /// Loads the setup files, the item corpus and the TF-IDF model.
    pub async fn bootstrap(cfg: GatewayConfig, clock: Arc<dyn Clock>) -> Result<Self, GatewayError> {
        cfg.validate().map_err(|e| GatewayError::Setup(e.to_string()))?;
        let read =
            |p: &std::path::Path| std::fs::read(p).map_err(|e| GatewayError::Setup(format!("{}: {e}", p.display())));
        let mut workspace =
            Workspace::from_json(&read(&cfg.workspace_path)?).map_err(|e| GatewayError::Setup(e.to_string()))?;
        let catalog =
            MessageCatalog::from_json(&read(&cfg.messages_path)?).map_err(|e| GatewayError::Setup(e.to_string()))?;
        catalog
            .require(keys::ALL.iter().copied())
            .map_err(|e| GatewayError::Setup(format!("{}: {e}", cfg.messages_path.display())))?;

        let upstream = Upstream::new(&cfg)?;
        let corpus = match &cfg.corpus_path {
            Some(path) => {
                parse_item_list(&read(path)?).map_err(|e| GatewayError::Setup(format!("{}: {e}", path.display())))?
            }
            None => upstream.fetch_all_items().await?,
        };
        let model = TfIdfModel::build(&corpus).map_err(|e| GatewayError::Setup(e.to_string()))?;
        let policy = Policy::new(PolicyConfig {
            ask_threshold: cfg.ask_threshold,
            ..PolicyConfig::default()
        });
        augment_workspace(&mut workspace, &corpus, &policy.config().item_entity);
        let items = corpus
            .into_iter()
            .map(|profile| {
                let vector = model.vectorize_item(&profile);
                (profile.item_id.clone(), CachedItem { profile, vector })
            })
            .collect();
        let upm = PreferenceManager::new(cfg.upm()).map_err(|e| GatewayError::Setup(e.to_string()))?;
        let store = FileStore::open(&cfg.persistence_path)?;
        tracing::info!(
            items = model.n_docs(),
            features = model.known_features().count(),
            "model built"
        );
        Ok(Self {
            upstream,
            model,
            items: RwLock::new(items),
            classifier: Classifier::new(&workspace),
            policy,
            catalog,
            upm,
            store,
            sessions: RwLock::new(HashMap::new()),
            clock,
            cfg,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    pub fn store(&self) -> &FileStore {
        &self.store
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn session(&self, sid: &str) -> Result<Arc<Mutex<Session>>, GatewayError> {
        self.sessions
            .read()
            .unwrap()
            .get(sid)
            .cloned()
            .ok_or_else(|| GatewayError::SessionNotFound(sid.to_owned()))
    }

    pub async fn open_session(&self, user_id: &str) -> Result<String, GatewayError> {
        let user = self.upstream.fetch_user(user_id).await.map_err(|e| match e {
            UpstreamError::NotFound(_) => GatewayError::UserNotFound(user_id.to_owned()),
            other => other.into(),
        })?;
        let now = self.clock.now();
        let profile = {
            let lock = self.store.user_lock(user_id);
            let _guard = lock.lock().await;
            let permanent = self
                .store
                .load(user_id)?
                .unwrap_or_else(|| PreferenceStore::empty(user_id, now));
            self.upm.open_session("", user_id, &permanent, now)
        };
        let mut sessions = self.sessions.write().unwrap();
        let id = loop {
            let id = hex::encode(rand::random::<[u8; 16]>());
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let session = Session {
            id: id.clone(),
            user_id: user_id.to_owned(),
            state: DialogueState::default(),
            profile: SessionProfile {
                session_id: id.clone(),
                ..profile
            },
            created_at: now,
            upstream: RecommendationList::default(),
            user: Some(user),
            history_vec: None,
            merged: None,
        };
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Merges the session into the permanent store (unless a farewell turn
    /// already did) and forgets it. Returns the number of distinct features
    /// the session's preferences touched.
    pub async fn close_session(&self, sid: &str) -> Result<usize, GatewayError> {
        let handle = self
            .sessions
            .write()
            .unwrap()
            .remove(sid)
            .ok_or_else(|| GatewayError::SessionNotFound(sid.to_owned()))?;
        let mut session = handle.lock().await;
        match self.merge(&mut session).await {
            Ok(n) => Ok(n),
            Err(e) => {
                drop(session);
                self.sessions.write().unwrap().insert(sid.to_owned(), handle);
                Err(e)
            }
        }
    }

    async fn merge(&self, s: &mut Session) -> Result<usize, GatewayError> {
        if let Some(n) = s.merged {
            return Ok(n);
        }
        let lock = self.store.user_lock(&s.user_id);
        let _guard = lock.lock().await;
        let now = self.clock.now();
        let permanent = self
            .store
            .load(&s.user_id)?
            .unwrap_or_else(|| PreferenceStore::empty(&s.user_id, s.profile.started_at));
        let merged = self.upm.close_session(&s.profile, &permanent, now);
        if let Err(first) = self.store.save(&merged) {
            tracing::warn!(user_id = s.user_id, "retrying store write after: {first}");
            self.store.save(&merged)?;
        }
        let touched: BTreeSet<&FeatureKey> = s
            .profile
            .events
            .iter()
            .flat_map(|e| match &e.target {
                PreferenceTarget::Feature { feature } => std::slice::from_ref(feature),
                PreferenceTarget::Item { features, .. } => features.as_slice(),
            })
            .collect();
        let n = touched.len();
        s.merged = Some(n);
        Ok(n)
    }

    pub async fn handle_message(&self, sid: &str, text: &str) -> Result<Reply, GatewayError> {
        let handle = self.session(sid)?;
        let mut s = handle.lock().await;
        let nlu = self.classifier.classify(text);
        tracing::debug!(
            session = sid,
            intent = nlu.intent,
            confidence = nlu.confidence,
            "classified"
        );
        let before = s.state.clone();
        let outcome = match self.policy.next_action(&s.state, &nlu) {
            Ok((actions, next)) => {
                s.state = next;
                self.execute(&mut s, &actions).await
            }
            Err(e) => Err(e.into()),
        };
        Ok(match outcome {
            Ok(reply) => reply,
            Err(e) => {
                let turns = s.state.turn_count.max(before.turn_count + 1);
                s.state = DialogueState {
                    turn_count: turns,
                    ..before
                };
                let key = match &e {
                    TurnError::Upstream(err) => {
                        tracing::warn!(session = sid, "upstream failure: {err}");
                        keys::SERVICE_UNAVAILABLE
                    }
                    TurnError::ItemUnknown => keys::ITEM_UNKNOWN,
                    TurnError::Other(err) => {
                        tracing::error!(session = sid, "turn failed: {err}");
                        keys::ERROR_GENERIC
                    }
                };
                Reply::text(self.msg(key, &Slots::new()).unwrap_or_default())
            }
        })
    }

    fn msg(&self, key: &str, slots: &Slots<'_>) -> Result<String, TurnError> {
        Ok(self.catalog.render(key, slots)?)
    }

    fn feature_label(&self, f: &FeatureKey) -> Result<String, TurnError> {
        self.msg(
            keys::FEATURE_LABEL,
            &Slots::from([("category", f.category().to_owned()), ("value", f.value().to_owned())]),
        )
    }

    fn join(&self, parts: Vec<String>) -> Result<String, TurnError> {
        Ok(parts.join(&self.msg(keys::LIST_SEPARATOR, &Slots::new())?))
    }

    fn cached(&self, item_id: &str) -> Option<CachedItem> {
        self.items.read().unwrap().get(item_id).cloned()
    }

    async fn item(&self, item_id: &str) -> Result<CachedItem, UpstreamError> {
        if let Some(c) = self.cached(item_id) {
            return Ok(c);
        }
        let profile = self.upstream.fetch_item(item_id).await?;
        let vector = self.model.vectorize_item(&profile);
        let c = CachedItem { profile, vector };
        self.items.write().unwrap().insert(item_id.to_owned(), c.clone());
        Ok(c)
    }

    fn title(&self, item_id: &str) -> String {
        self.cached(item_id)
            .map(|c| c.profile.title)
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| item_id.to_owned())
    }

    async fn history_vector(&self, user: &UserProfile) -> FeatureVector {
        let mut resolved = HashMap::new();
        for entry in &user.history {
            match self.item(&entry.item).await {
                Ok(c) => {
                    resolved.insert(entry.item.clone(), c.profile);
                }
                Err(e) => tracing::debug!(item = entry.item, "history item skipped: {e}"),
            }
        }
        self.model.vectorize_history(user, &resolved)
    }

    async fn ensure_user(&self, s: &mut Session) -> Result<FeatureVector, TurnError> {
        if let Some(v) = &s.history_vec {
            return Ok(v.clone());
        }
        let user = match &s.user {
            Some(u) => u.clone(),
            None => self
                .upstream
                .fetch_user(&s.user_id)
                .await
                .map_err(TurnError::Upstream)?,
        };
        let v = self.history_vector(&user).await;
        s.user = Some(user);
        s.history_vec = Some(v.clone());
        Ok(v)
    }

    async fn execute(&self, s: &mut Session, actions: &[Action]) -> Result<Reply, TurnError> {
        let mut replies = Vec::with_capacity(actions.len());
        for action in actions {
            replies.push(self.run(s, action).await?);
        }
        let mut out = replies.pop().unwrap_or_else(|| Reply::text(String::new()));
        for r in replies.into_iter().rev() {
            out.reply = format!("{}\n{}", r.reply, out.reply);
        }
        Ok(out)
    }

    async fn run(&self, s: &mut Session, action: &Action) -> Result<Reply, TurnError> {
        let none = Slots::new();
        match action {
            Action::Recommend => {
                self.recommend_flow(s).await?;
                self.present(s, Vec::new())
            }
            Action::Explain { item_id } => self.explain_item(s, item_id).await,
            Action::ShowProfile => self.show_profile(s).await,
            Action::ItemDetails { item_id } => self.item_details(item_id).await,
            Action::RecordFeaturePref { feature, polarity } => {
                self.upm
                    .apply_feature_preference(&mut s.profile, feature, *polarity, self.clock.now());
                let ack = self.ack(*polarity, self.feature_label(feature)?)?;
                self.after_preference(s, ack).await
            }
            Action::RecordItemPref { item_id, polarity } => {
                let item = self.item(item_id).await?;
                if let Err(e) =
                    self.upm
                        .apply_item_preference(&mut s.profile, &item.profile, *polarity, self.clock.now())
                {
                    tracing::info!("{e}");
                }
                if *polarity == Polarity::Like {
                    self.push_history(s, item_id).await;
                }
                let ack = self.ack(*polarity, self.title(item_id))?;
                self.after_preference(s, ack).await
            }
            Action::ApplyAnswer { feature, answer } => self.apply_answer(s, feature, *answer).await,
            Action::CloseSession => {
                let n = self.merge(s).await.map_err(|e| TurnError::Other(e.to_string()))?;
                Ok(Reply::text(
                    self.msg(keys::GOODBYE, &Slots::from([("n", n.to_string())]))?,
                ))
            }
            Action::Help { unrecognized: true } => Ok(Reply::text(self.msg(keys::FALLBACK, &none)?)),
            Action::Help { unrecognized: false } => Ok(Reply::text(self.msg(keys::HELP, &none)?)),
            Action::SessionEnded => Ok(Reply::text(self.msg(keys::SESSION_ENDED, &none)?)),
            Action::AskQuestion { question } => {
                let text = self.ask(question)?;
                Ok(Reply::with(text, "question", self.question_payload(question)?))
            }
        }
    }

    /// Appends a liked item to the upstream user profile.
    async fn push_history(&self, s: &mut Session, item_id: &str) {
        if !self.upstream.user_update_enabled() {
            return;
        }
        let Some(user) = s.user.as_mut() else {
            return;
        };
        if user.history.iter().any(|h| h.item == item_id) {
            return;
        }
        user.history.push(HistoryEntry {
            item: item_id.to_owned(),
            score: None,
            timestamp: Some(self.clock.now()),
        });
        self.upstream.push_user_update(user);
    }

    fn ack(&self, polarity: Polarity, target: String) -> Result<String, TurnError> {
        let stance = self.msg(
            match polarity {
                Polarity::Like => keys::STANCE_LIKE,
                Polarity::Dislike => keys::STANCE_DISLIKE,
            },
            &Slots::new(),
        )?;
        self.msg(
            keys::ACK_PREFERENCE,
            &Slots::from([("stance", stance), ("target", target)]),
        )
    }

    /// A stated preference re-ranks the list on screen right away.
    async fn after_preference(&self, s: &mut Session, ack: String) -> Result<Reply, TurnError> {
        if s.state.last_list_shown.is_none() {
            return Ok(Reply::text(ack));
        }
        self.rerank_candidates(s);
        self.present_list(s, vec![ack], None)
    }

    /// Fetches the user and their upstream list and re-ranks it.
    async fn recommend_flow(&self, s: &mut Session) -> Result<(), TurnError> {
        let user = self
            .upstream
            .fetch_user(&s.user_id)
            .await
            .map_err(TurnError::Upstream)?;
        let list = self
            .upstream
            .fetch_recommendations(&user, self.cfg.n_recommendations)
            .await
            .map_err(TurnError::Upstream)?;
        for id in list.item_ids() {
            if let Err(e) = self.item(id).await {
                tracing::warn!(item = id, "no profile for recommended item: {e}");
            }
        }
        s.history_vec = Some(self.history_vector(&user).await);
        s.user = Some(user);
        s.state.candidates = list.clone();
        s.upstream = list;
        self.rerank_candidates(s);
        Ok(())
    }

    /// Re-ranks the current candidates from their upstream scores and the
    /// session preferences, explains them and puts them on screen.
    fn rerank_candidates(&self, s: &mut Session) {
        let keep: BTreeSet<&str> = s.state.candidates.item_ids().collect();
        let base = RecommendationList {
            items: s
                .upstream
                .items
                .iter()
                .filter(|i| keep.contains(i.item_id.as_str()))
                .cloned()
                .collect(),
        };
        let pref_vec = self.model.vectorize_preferences(&s.profile.temp_weights);
        let vecs: HashMap<String, FeatureVector> = base
            .item_ids()
            .filter_map(|id| self.cached(id).map(|c| (id.to_owned(), c.vector)))
            .collect();
        let mut ranked = rerank(&base, &pref_vec, &vecs, self.cfg.rerank());
        let history = s.history_vec.clone().unwrap_or_default();
        for item in ranked.items.iter_mut().filter(|i| needs_explanation(i)) {
            let v = vecs.get(&item.item_id).cloned().unwrap_or_default();
            item.explanation = Some(explain(
                &item.item_id,
                &v,
                &history,
                &pref_vec,
                self.cfg.beta,
                self.cfg.k_explain,
            ));
        }
        s.state.show_list(ranked);
    }

    fn candidate_profiles(&self, s: &Session) -> Vec<ItemProfile> {
        s.state
            .candidates
            .item_ids()
            .map(|id| {
                self.cached(id)
                    .map(|c| c.profile)
                    .unwrap_or_else(|| ItemProfile::new(id, id, Vec::new()))
            })
            .collect()
    }

    /// Shows the current list and, when the policy wants one, a question.
    fn present(&self, s: &mut Session, prefix: Vec<String>) -> Result<Reply, TurnError> {
        let (question, next) = self.policy.after_recommend(&s.state, &self.candidate_profiles(s));
        s.state = next;
        let question = match question {
            Some(Action::AskQuestion { question }) => Some(question),
            _ => None,
        };
        self.present_list(s, prefix, question.as_ref())
    }

    fn present_list(
        &self,
        s: &Session,
        mut lines: Vec<String>,
        question: Option<&ElicitationQuestion>,
    ) -> Result<Reply, TurnError> {
        let list = s.state.last_list_shown.clone().unwrap_or_default();
        let mut items = Vec::with_capacity(list.len());
        if list.is_empty() {
            lines.push(self.msg(keys::REC_EMPTY, &Slots::new())?);
        } else {
            lines.push(self.msg(keys::REC_HEADER, &Slots::from([("n", list.len().to_string())]))?);
        }
        for (i, item) in list.items.iter().enumerate() {
            let title = self.title(&item.item_id);
            let score = item.final_score.unwrap_or_default();
            let reasons = item
                .explanation
                .as_ref()
                .map(|e| e.contributions.clone())
                .unwrap_or_default();
            let reason = if reasons.is_empty() {
                self.msg(keys::REC_REASON_NONE, &Slots::new())?
            } else {
                let labels = reasons
                    .iter()
                    .map(|c| self.feature_label(&c.feature))
                    .collect::<Result<Vec<_>, _>>()?;
                self.msg(keys::REC_REASON, &Slots::from([("features", self.join(labels)?)]))?
            };
            lines.push(self.msg(
                keys::REC_ITEM_LINE,
                &Slots::from([
                    ("rank", (i + 1).to_string()),
                    ("title", title.clone()),
                    ("item_id", item.item_id.clone()),
                    ("score", fmt4(score)),
                    ("reason", reason),
                ]),
            )?);
            items.push(json!({
                "rank": i + 1,
                "item_id": item.item_id,
                "title": title,
                "score": round4(score),
                "reasons": reasons
                    .iter()
                    .map(|c| json!({"feature": c.feature, "score": round4(c.score)}))
                    .collect::<Vec<_>>(),
            }));
        }
        let mut payload = json!({ "items": items });
        if let Some(q) = question {
            lines.push(self.ask(q)?);
            payload["question"] = self.question_payload(q)?;
        }
        Ok(Reply::with(lines.join("\n"), "rec_list", payload))
    }

    fn ask(&self, q: &ElicitationQuestion) -> Result<String, TurnError> {
        self.msg(
            keys::ASK_QUESTION,
            &Slots::from([("feature", self.feature_label(&q.feature)?)]),
        )
    }

    fn question_payload(&self, q: &ElicitationQuestion) -> Result<Value, TurnError> {
        Ok(json!({
            "feature": q.feature,
            "label": self.feature_label(&q.feature)?,
            "gain": round4(q.gain),
            "candidate_count": q.candidate_count,
        }))
    }

    async fn apply_answer(&self, s: &mut Session, feature: &FeatureKey, answer: Answer) -> Result<Reply, TurnError> {
        let candidates = self.candidate_profiles(s);
        let (kept, polarity) = match apply_answer(&candidates, feature, answer) {
            Ok(AnswerOutcome { candidates, polarity }) => (Some(candidates), polarity),
            Err(QuestionError::WouldEmptyCandidates { polarity }) => (None, Some(polarity)),
            Err(e) => return Err(TurnError::Other(e.to_string())),
        };
        if let Some(p) = polarity {
            self.upm
                .apply_feature_preference(&mut s.profile, feature, p, self.clock.now());
        }
        if let Some(kept) = kept {
            let ids: BTreeSet<&str> = kept.iter().map(|i| i.item_id.as_str()).collect();
            s.state.candidates.items.retain(|i| ids.contains(i.item_id.as_str()));
        }
        let note = match answer {
            Answer::Indifferent => self.msg(
                keys::ANSWER_SKIPPED,
                &Slots::from([("feature", self.feature_label(feature)?)]),
            )?,
            _ => self.msg(
                keys::ANSWER_NOTED,
                &Slots::from([("n", s.state.candidates.len().to_string())]),
            )?,
        };
        self.rerank_candidates(s);
        self.present(s, vec![note])
    }

    async fn explain_item(&self, s: &mut Session, item_id: &str) -> Result<Reply, TurnError> {
        let item = self.item(item_id).await?;
        let history = self.ensure_user(s).await?;
        let pref_vec = self.model.vectorize_preferences(&s.profile.temp_weights);
        let e = explain(
            item_id,
            &item.vector,
            &history,
            &pref_vec,
            self.cfg.beta,
            self.cfg.k_explain,
        );
        let title = self.title(item_id);
        let mut lines = Vec::new();
        if e.contributions.is_empty() {
            lines.push(self.msg(keys::EXPLAIN_NONE, &Slots::from([("title", title.clone())]))?);
        } else {
            lines.push(self.msg(keys::EXPLAIN_HEADER, &Slots::from([("title", title.clone())]))?);
            for c in &e.contributions {
                lines.push(self.msg(
                    keys::EXPLAIN_LINE,
                    &Slots::from([("feature", self.feature_label(&c.feature)?), ("score", fmt4(c.score))]),
                )?);
            }
        }
        let payload = json!({
            "item_id": item_id,
            "title": title,
            "contributions": e
                .contributions
                .iter()
                .map(|c| json!({"feature": c.feature, "score": round4(c.score)}))
                .collect::<Vec<_>>(),
        });
        Ok(Reply::with(lines.join("\n"), "explanation", payload))
    }

    async fn show_profile(&self, s: &mut Session) -> Result<Reply, TurnError> {
        let history = self.ensure_user(s).await?;
        let view = profile_view(&history_weights(&history), &s.profile.temp_weights, self.cfg.k_profile);
        let mut lines = Vec::new();
        if view.entries.is_empty() {
            lines.push(self.msg(keys::PROFILE_EMPTY, &Slots::new())?);
        } else {
            lines.push(self.msg(keys::PROFILE_HEADER, &Slots::new())?);
        }
        for e in &view.entries {
            let source = self.msg(
                match e.source {
                    ProfileSource::History => keys::SOURCE_HISTORY,
                    ProfileSource::Stated => keys::SOURCE_STATED,
                    ProfileSource::Both => keys::SOURCE_BOTH,
                },
                &Slots::new(),
            )?;
            lines.push(self.msg(
                keys::PROFILE_LINE,
                &Slots::from([
                    ("feature", self.feature_label(&e.feature)?),
                    ("weight", format!("{:+.2}", round4(e.weight))),
                    ("source", source),
                ]),
            )?);
        }
        let payload = json!({
            "entries": view
                .entries
                .iter()
                .map(|e| json!({"feature": e.feature, "weight": round4(e.weight), "source": e.source}))
                .collect::<Vec<_>>(),
        });
        Ok(Reply::with(lines.join("\n"), "profile", payload))
    }

    async fn item_details(&self, item_id: &str) -> Result<Reply, TurnError> {
        let item = self.item(item_id).await?;
        let description = match self.upstream.fetch_item_description(item_id).await {
            Ok(d) => d,
            Err(UpstreamError::NotFound(_)) => None,
            Err(e) => {
                tracing::warn!(item = item_id, "description unavailable: {e}");
                None
            }
        };
        let labels = item
            .profile
            .feature_keys()
            .map(|k| self.feature_label(&k))
            .collect::<Result<Vec<_>, _>>()?;
        let features_text = self.msg(keys::ITEM_FEATURES, &Slots::from([("features", self.join(labels)?)]))?;
        let title = self.title(item_id);
        let details = match &description {
            Some(d) => format!("{d}\n{features_text}"),
            None => features_text,
        };
        let reply = self.msg(
            keys::ITEM_DETAILS,
            &Slots::from([
                ("title", title.clone()),
                ("item_id", item_id.to_owned()),
                ("details", details),
            ]),
        )?;
        let payload = json!({
            "item_id": item_id,
            "title": title,
            "features": item.profile.feature_keys().collect::<Vec<_>>(),
            "description": description,
        });
        Ok(Reply::with(reply, "item", payload))
    }
}
