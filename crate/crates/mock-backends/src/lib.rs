//! Stand-ins for the external recommender, user and item services.
//!
//! The recommender is a content-based cosine scorer over the same TF-IDF
//! space the middleware uses. With [`ScoreScale::Hundred`] it reports scores
//! on a 0-100 scale, which exercises score normalization downstream.

pub mod corpus;
pub mod recommend;
pub mod server;

pub use corpus::{Corpus, CorpusError, BUNDLED_CORPUS};
pub use recommend::{mock_recommend, ScoreScale};
pub use server::{router, spawn, MockServices};
