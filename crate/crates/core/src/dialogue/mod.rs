//! Conversation handling: utterance classification, the dialogue policy and
//! response templates.

pub mod messages;
pub mod nlu;
pub mod policy;

pub use messages::{render, MessageCatalog};
pub use nlu::{classify, Classifier, EntityMatch, NluResult, Workspace, FALLBACK_INTENT};
pub use policy::{intents, Action, DialogueState, Phase, Policy, PolicyConfig};
