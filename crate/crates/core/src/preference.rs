//! Session and permanent preference profiles.
//!
//! A session starts from the decayed permanent weights and applies every
//! stated preference with the session step `w_session`. Closing the session
//! replays the logged events onto the permanent store with the smaller step
//! `w_perm`. Permanent weights decay as `w * exp(-lambda * days)` whenever
//! they are read; decay is never written back.

use serde::{Deserialize, Serialize};

use crate::domain::{
    FeatureKey, ItemProfile, Polarity, PreferenceEvent, PreferenceStore, PreferenceTarget, SessionProfile, Timestamp,
    Weights, SECONDS_PER_DAY,
};
use crate::error::{ConfigError, PreferenceError};

/// Below this magnitude a session weight counts as zero and is removed.
const ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpmConfig {
    pub w_session: f64,
    pub w_perm: f64,
    /// Decay rate per day.
    pub lambda: f64,
    pub epsilon_prune: f64,
}

impl Default for UpmConfig {
    fn default() -> Self {
        Self {
            w_session: 0.6,
            w_perm: 0.2,
            lambda: 0.01,
            epsilon_prune: 1e-3,
        }
    }
}

impl UpmConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [("w_session", self.w_session), ("w_perm", self.w_perm)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ConfigError::OutOfRange {
                    name,
                    value,
                    range: "(0, 1]",
                });
            }
        }
        if self.w_perm >= self.w_session {
            return Err(ConfigError::Inconsistent(format!(
                "w_perm ({}) must be smaller than w_session ({})",
                self.w_perm, self.w_session
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ConfigError::OutOfRange {
                name: "lambda",
                value: self.lambda,
                range: "[0, inf)",
            });
        }
        if !(self.epsilon_prune >= 0.0 && self.epsilon_prune < 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "epsilon_prune",
                value: self.epsilon_prune,
                range: "[0, 1)",
            });
        }
        Ok(())
    }
}

/// Adds `step` to the weight of `key`, clamps to [-1, 1] and drops the entry
/// once it reaches zero.
fn bump(weights: &mut Weights, key: &FeatureKey, step: f64) {
    let current = weights.get(key).copied().unwrap_or(0.0);
    let next = (current + step).clamp(-1.0, 1.0);
    if next.abs() < ZERO_TOLERANCE {
        weights.remove(key);
    } else {
        weights.insert(key.clone(), next);
    }
}

fn apply_event(weights: &mut Weights, event: &PreferenceEvent, step: f64) {
    let signed = step * event.polarity.sign();
    match &event.target {
        PreferenceTarget::Feature { feature } => bump(weights, feature, signed),
        PreferenceTarget::Item { features, .. } => {
            if features.is_empty() {
                return;
            }
            let share = signed / features.len() as f64;
            for f in features {
                bump(weights, f, share);
            }
        }
    }
}

fn prune(weights: &mut Weights, epsilon: f64) {
    weights.retain(|_, w| w.abs() >= epsilon && *w != 0.0);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PreferenceManager {
    cfg: UpmConfig,
}

impl PreferenceManager {
    pub fn new(cfg: UpmConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &UpmConfig {
        &self.cfg
    }

    pub fn decay_factor(&self, elapsed_days: f64) -> f64 {
        (-self.cfg.lambda * elapsed_days).exp()
    }

    /// Read-time view of the permanent store. `last_updated` is left as is.
    ///
    /// A store stamped in the future is returned undecayed inside
    /// [`PreferenceError::ClockSkew`].
    pub fn get_permanent(&self, store: &PreferenceStore, now: Timestamp) -> Result<PreferenceStore, PreferenceError> {
        if now < store.last_updated {
            return Err(PreferenceError::ClockSkew {
                now,
                last_updated: store.last_updated,
                store: store.clone(),
            });
        }
        let days = (now - store.last_updated) as f64 / SECONDS_PER_DAY;
        let factor = self.decay_factor(days);
        let mut weights: Weights = store.weights.iter().map(|(k, w)| (k.clone(), w * factor)).collect();
        prune(&mut weights, self.cfg.epsilon_prune);
        Ok(PreferenceStore {
            user_id: store.user_id.clone(),
            weights,
            last_updated: store.last_updated,
        })
    }

    fn decayed_or_raw(&self, store: &PreferenceStore, now: Timestamp) -> PreferenceStore {
        match self.get_permanent(store, now) {
            Ok(s) => s,
            Err(PreferenceError::ClockSkew { store, .. }) => store,
            Err(other) => unreachable!("get_permanent only reports clock skew: {other}"),
        }
    }

    pub fn open_session(
        &self,
        session_id: impl Into<String>,
        user_id: impl Into<String>,
        permanent: &PreferenceStore,
        now: Timestamp,
    ) -> SessionProfile {
        let decayed = self.decayed_or_raw(permanent, now);
        SessionProfile {
            session_id: session_id.into(),
            user_id: user_id.into(),
            temp_weights: decayed.weights,
            events: Vec::new(),
            started_at: now,
        }
    }

    fn log(
        session: &mut SessionProfile,
        target: PreferenceTarget,
        polarity: Polarity,
        now: Timestamp,
    ) -> PreferenceEvent {
        // keep the log ordered even if the caller's clock steps back
        let timestamp = session.events.last().map_or(now, |e| e.timestamp.max(now));
        let event = PreferenceEvent {
            target,
            polarity,
            timestamp,
        };
        session.events.push(event.clone());
        event
    }

    pub fn apply_feature_preference(
        &self,
        session: &mut SessionProfile,
        feature: &FeatureKey,
        polarity: Polarity,
        now: Timestamp,
    ) {
        let event = Self::log(
            session,
            PreferenceTarget::Feature {
                feature: feature.clone(),
            },
            polarity,
            now,
        );
        apply_event(&mut session.temp_weights, &event, self.cfg.w_session);
    }

    /// Spreads one session step evenly over the item's features. An item
    /// without features is still logged but changes no weight.
    pub fn apply_item_preference(
        &self,
        session: &mut SessionProfile,
        item: &ItemProfile,
        polarity: Polarity,
        now: Timestamp,
    ) -> Result<(), PreferenceError> {
        let event = Self::log(
            session,
            PreferenceTarget::Item {
                item_id: item.item_id.clone(),
                features: item.feature_keys().collect(),
            },
            polarity,
            now,
        );
        if item.features().is_empty() {
            return Err(PreferenceError::EmptyFeatureSet(item.item_id.clone()));
        }
        apply_event(&mut session.temp_weights, &event, self.cfg.w_session);
        Ok(())
    }

    /// Replays the session's events onto the decayed permanent store with
    /// the permanent step and stamps it with `now`.
    pub fn close_session(
        &self,
        session: &SessionProfile,
        permanent: &PreferenceStore,
        now: Timestamp,
    ) -> PreferenceStore {
        let mut store = self.decayed_or_raw(permanent, now);
        for event in &session.events {
            apply_event(&mut store.weights, event, self.cfg.w_perm);
        }
        prune(&mut store.weights, self.cfg.epsilon_prune);
        store.last_updated = now;
        store
    }
}
