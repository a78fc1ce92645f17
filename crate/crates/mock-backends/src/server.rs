//! HTTP surface of the mock services. Paths follow the consumed contract:
//!
//! | method | path               | body / reply                  |
//! |--------|--------------------|-------------------------------|
//! | POST   | `recommend/get`    | user_profile -> rec_list      |
//! | GET    | `user/get/{uid}`   | user_profile                  |
//! | POST   | `user/update`      | user_profile -> 204           |
//! | GET    | `item/get/{iid}`   | item_profile                  |
//! | GET    | `item/desc/{iid}`  | description text (plain)      |
//! | GET    | `item/all`         | `{"items": [item_profile]}`   |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use irf_core::{parse_user_profile, ItemProfile, RecommendationList, TfIdfModel, UserProfile};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::corpus::Corpus;
use crate::recommend::{mock_recommend, ScoreScale};

pub struct MockServices {
    items: HashMap<String, ItemProfile>,
    users: Mutex<HashMap<String, UserProfile>>,
    model: TfIdfModel,
    scale: ScoreScale,
    update_calls: AtomicUsize,
    recommend_calls: AtomicUsize,
    fail_updates: AtomicBool,
    recommend_delay_ms: AtomicU64,
}

impl MockServices {
    pub fn new(corpus: Corpus, scale: ScoreScale) -> Self {
        let model = TfIdfModel::build(&corpus.items).expect("validated corpus is non-empty");
        Self {
            items: corpus.item_map(),
            users: Mutex::new(corpus.users.into_iter().map(|u| (u.user_id.clone(), u)).collect()),
            model,
            scale,
            update_calls: AtomicUsize::new(0),
            recommend_calls: AtomicUsize::new(0),
            fail_updates: AtomicBool::new(false),
            recommend_delay_ms: AtomicU64::new(0),
        }
    }

    pub fn recommend(&self, profile: &UserProfile) -> RecommendationList {
        mock_recommend(profile, &self.model, &self.items, self.scale)
    }

    pub fn user(&self, user_id: &str) -> Option<UserProfile> {
        self.users.lock().unwrap().get(user_id).cloned()
    }

    /// Appends history entries for items the stored profile does not have
    /// yet and takes over the extra fields.
    pub fn update_user(&self, profile: UserProfile) -> bool {
        let mut users = self.users.lock().unwrap();
        let Some(stored) = users.get_mut(&profile.user_id) else {
            return false;
        };
        for entry in profile.history {
            if !stored.history.iter().any(|e| e.item == entry.item) {
                stored.history.push(entry);
            }
        }
        for (k, v) in profile.extra {
            stored.extra.insert(k, v);
        }
        true
    }

    pub fn update_calls(&self) -> usize {
        self.update_calls.load(Ordering::SeqCst)
    }

    pub fn recommend_calls(&self) -> usize {
        self.recommend_calls.load(Ordering::SeqCst)
    }

    /// Makes `user/update` answer 500.
    pub fn set_fail_updates(&self, fail: bool) {
        self.fail_updates.store(fail, Ordering::SeqCst);
    }

    /// Delays every `recommend/get` reply.
    pub fn set_recommend_delay(&self, delay: Duration) {
        self.recommend_delay_ms
            .store(delay.as_millis() as u64, Ordering::SeqCst);
    }
}

type Shared = Arc<MockServices>;

fn bad_request(msg: impl std::fmt::Display) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": msg.to_string() }))).into_response()
}

fn not_found(what: &str, id: &str) -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(json!({ "error": format!("unknown {what} `{id}`") })),
    )
        .into_response()
}

async fn recommend(State(s): State<Shared>, body: Bytes) -> Response {
    s.recommend_calls.fetch_add(1, Ordering::SeqCst);
    let delay = s.recommend_delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }
    match parse_user_profile(&body) {
        Ok(profile) => Json(s.recommend(&profile)).into_response(),
        Err(e) => bad_request(e),
    }
}

async fn user_get(State(s): State<Shared>, Path(uid): Path<String>) -> Response {
    match s.user(&uid) {
        Some(u) => Json(u).into_response(),
        None => not_found("user", &uid),
    }
}

async fn user_update(State(s): State<Shared>, body: Bytes) -> Response {
    s.update_calls.fetch_add(1, Ordering::SeqCst);
    if s.fail_updates.load(Ordering::SeqCst) {
        return (StatusCode::INTERNAL_SERVER_ERROR, "update store unavailable").into_response();
    }
    let profile = match parse_user_profile(&body) {
        Ok(p) => p,
        Err(e) => return bad_request(e),
    };
    let uid = profile.user_id.clone();
    if s.update_user(profile) {
        StatusCode::NO_CONTENT.into_response()
    } else {
        not_found("user", &uid)
    }
}

async fn item_get(State(s): State<Shared>, Path(iid): Path<String>) -> Response {
    match s.items.get(&iid) {
        Some(item) => Json(item).into_response(),
        None => not_found("item", &iid),
    }
}

async fn item_desc(State(s): State<Shared>, Path(iid): Path<String>) -> Response {
    match s.items.get(&iid).and_then(|i| i.description.clone()) {
        Some(text) => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response(),
        None => not_found("item description", &iid),
    }
}

async fn item_all(State(s): State<Shared>) -> Response {
    let mut items: Vec<&ItemProfile> = s.items.values().collect();
    items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    Json(json!({ "items": items })).into_response()
}

pub fn router(services: Shared) -> Router {
    Router::new()
        .route("/recommend/get", post(recommend))
        .route("/recommend/get/", post(recommend))
        .route("/user/get/{uid}", get(user_get))
        .route("/user/update", post(user_update))
        .route("/item/get/{iid}", get(item_get))
        .route("/item/desc/{iid}", get(item_desc))
        .route("/item/all", get(item_all))
        .with_state(services)
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub async fn spawn(services: Shared, addr: SocketAddr) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(services);
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("mock services stopped: {e}");
        }
    });
    Ok((local, handle))
}
