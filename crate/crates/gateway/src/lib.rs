//! Conversational front end for a non-interactive recommender.
//!
//! The gateway keeps one dialogue per session. Each turn is classified
//! against the workspace file, mapped to an action by the dialogue policy
//! and answered from the messages file. Recommendations come from the
//! upstream recommender and are re-ranked with the preferences stated so
//! far. Those preferences are merged into a per-user store on disk when
//! the session ends.

pub mod clients;
pub mod clock;
pub mod config;
pub mod http;
pub mod service;
pub mod store;

pub use clients::{Upstream, UpstreamError};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::GatewayConfig;
pub use service::{Gateway, GatewayError, Reply};
pub use store::FileStore;
