//! Building blocks of an interactive recommendation middleware.
//!
//! A non-interactive recommender is wrapped by a dialogue layer that learns
//! feature and item preferences from conversation ([`preference`]),
//! re-ranks the recommender's output with them ([`rerank`]), explains each
//! recommendation ([`explain`]) and asks the most informative follow-up
//! question ([`question`]). Items, users and preferences share one TF-IDF
//! feature space ([`vector`]).

pub mod dialogue;
pub mod domain;
pub mod error;
pub mod explain;
pub mod preference;
pub mod question;
pub mod rerank;
pub mod vector;

pub use domain::{
    parse_item_profile, parse_recommendation_list, parse_user_profile, Contribution, Explanation, Feature, FeatureKey,
    HistoryEntry, ItemProfile, Polarity, PreferenceEvent, PreferenceStore, PreferenceTarget, RecommendationList,
    ScoredItem, SessionProfile, Timestamp, UserProfile, Weights,
};
pub use error::{ConfigError, DialogueError, DomainError, PreferenceError, QuestionError, VectorError};
pub use explain::{explain, needs_explanation, profile_view, ProfileSource, ProfileView};
pub use preference::{PreferenceManager, UpmConfig};
pub use question::{apply_answer, information_gain, select_question_feature, Answer, ElicitationQuestion};
pub use rerank::{rerank, RerankConfig};
pub use vector::{cosine, FeatureVector, TfIdfModel};
