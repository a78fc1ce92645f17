//! Clients for the consumed services:
//!
//! - `POST recommend/get`: user_profile in, rec_list out
//! - `GET user/get/{uid}`
//! - `POST user/update` (optional)
//! - `GET item/get/{iid}`
//! - `GET item/desc/{iid}` (optional)
//! - `GET item/all`, used once at startup to build the TF-IDF model

use std::time::Duration;

use irf_core::{
    parse_item_profile, parse_recommendation_list, parse_user_profile, ItemProfile, RecommendationList, UserProfile,
};
use reqwest::{header, Client, Method, StatusCode};
use serde::Deserialize;

use crate::config::GatewayConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UpstreamError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("upstream unavailable: {0}")]
    Unavailable(String),
    #[error("upstream sent an unusable response: {0}")]
    Malformed(String),
}

fn base(url: &str) -> String {
    if url.ends_with('/') {
        url.to_owned()
    } else {
        format!("{url}/")
    }
}

#[derive(Debug, Clone)]
pub struct Upstream {
    http: Client,
    recommender: String,
    users: String,
    items: String,
    user_update_enabled: bool,
    item_desc_enabled: bool,
}

impl Upstream {
    pub fn new(cfg: &GatewayConfig) -> Result<Self, UpstreamError> {
        let http = Client::builder()
            .timeout(Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| UpstreamError::Unavailable(e.to_string()))?;
        Ok(Self {
            http,
            recommender: base(&cfg.recommender_base_url),
            users: base(&cfg.user_service_base_url),
            items: base(&cfg.item_service_base_url),
            user_update_enabled: cfg.user_update_enabled,
            item_desc_enabled: cfg.item_desc_enabled,
        })
    }

    pub fn item_desc_enabled(&self) -> bool {
        self.item_desc_enabled
    }

    pub fn user_update_enabled(&self) -> bool {
        self.user_update_enabled
    }

    async fn send_once(&self, method: Method, url: &str, body: Option<String>) -> Result<Vec<u8>, UpstreamError> {
        let mut req = self.http.request(method, url);
        if let Some(body) = body {
            req = req.header(header::CONTENT_TYPE, "application/json").body(body);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| UpstreamError::Unavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if status == StatusCode::NOT_FOUND {
            return Err(UpstreamError::NotFound(url.to_owned()));
        }
        if status.is_server_error() {
            return Err(UpstreamError::Unavailable(format!("{url}: HTTP {status}")));
        }
        if !status.is_success() {
            return Err(UpstreamError::Malformed(format!("{url}: HTTP {status}")));
        }
        resp.bytes()
            .await
            .map(|b| b.to_vec())
            .map_err(|e| UpstreamError::Unavailable(format!("{url}: {e}")))
    }

    /// GETs are idempotent and get one retry when the service is unreachable.
    async fn get(&self, url: &str) -> Result<Vec<u8>, UpstreamError> {
        match self.send_once(Method::GET, url, None).await {
            Err(UpstreamError::Unavailable(first)) => {
                tracing::debug!("retrying after: {first}");
                self.send_once(Method::GET, url, None).await
            }
            other => other,
        }
    }

    /// The upstream list truncated to `n`, in upstream order.
    pub async fn fetch_recommendations(
        &self,
        profile: &UserProfile,
        n: usize,
    ) -> Result<RecommendationList, UpstreamError> {
        let url = format!("{}recommend/get", self.recommender);
        let body = self.send_once(Method::POST, &url, Some(profile.to_json())).await?;
        let mut list = parse_recommendation_list(&body).map_err(|e| UpstreamError::Malformed(e.to_string()))?;
        list.truncate(n);
        Ok(list)
    }

    pub async fn fetch_user(&self, user_id: &str) -> Result<UserProfile, UpstreamError> {
        let body = self.get(&format!("{}user/get/{user_id}", self.users)).await?;
        parse_user_profile(&body).map_err(|e| UpstreamError::Malformed(e.to_string()))
    }

    pub async fn fetch_item(&self, item_id: &str) -> Result<ItemProfile, UpstreamError> {
        let body = self.get(&format!("{}item/get/{item_id}", self.items)).await?;
        parse_item_profile(&body).map_err(|e| UpstreamError::Malformed(e.to_string()))
    }

    /// `Ok(None)` when descriptions are switched off.
    pub async fn fetch_item_description(&self, item_id: &str) -> Result<Option<String>, UpstreamError> {
        if !self.item_desc_enabled {
            return Ok(None);
        }
        let body = self.get(&format!("{}item/desc/{item_id}", self.items)).await?;
        String::from_utf8(body)
            .map(Some)
            .map_err(|e| UpstreamError::Malformed(e.to_string()))
    }

    pub async fn fetch_all_items(&self) -> Result<Vec<ItemProfile>, UpstreamError> {
        let body = self.get(&format!("{}item/all", self.items)).await?;
        parse_item_list(&body).map_err(UpstreamError::Malformed)
    }

    /// Sends the profile in the background. Failures are logged only. Returns
    /// whether a request was issued.
    pub fn push_user_update(&self, profile: &UserProfile) -> bool {
        if !self.user_update_enabled {
            return false;
        }
        let this = self.clone();
        let url = format!("{}user/update", self.users);
        let body = profile.to_json();
        let user_id = profile.user_id.clone();
        tokio::spawn(async move {
            if let Err(e) = this.send_once(Method::POST, &url, Some(body)).await {
                tracing::warn!(user_id, "user/update failed: {e}");
            }
        });
        true
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ItemListWire {
    Wrapped { items: Vec<serde_json::Value> },
    Bare(Vec<serde_json::Value>),
}

/// Parses `{"items": [...]}` or a bare array of item profiles. Any other
/// top-level fields are ignored, so a mock corpus file also qualifies.
pub fn parse_item_list(raw: &[u8]) -> Result<Vec<ItemProfile>, String> {
    let wire: ItemListWire = serde_json::from_slice(raw).map_err(|e| e.to_string())?;
    let values = match wire {
        ItemListWire::Wrapped { items } => items,
        ItemListWire::Bare(items) => items,
    };
    values
        .into_iter()
        .map(|v| parse_item_profile(v.to_string().as_bytes()).map_err(|e| e.to_string()))
        .collect()
}
