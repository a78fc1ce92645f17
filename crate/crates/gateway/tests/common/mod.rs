#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use irf_gateway::{http, Gateway, GatewayConfig, ManualClock};
use irf_mock::{Corpus, MockServices, ScoreScale};
use serde_json::{json, Value};
use tempfile::TempDir;

pub const START: i64 = 1_700_000_000;

pub fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config")
}

pub fn localhost() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 0))
}

pub async fn start_mock(scale: ScoreScale) -> (String, Arc<MockServices>) {
    let services = Arc::new(MockServices::new(Corpus::bundled(), scale));
    let (addr, _) = irf_mock::spawn(services.clone(), localhost()).await.unwrap();
    (format!("http://{addr}/"), services)
}

/// The shipped config pointed at `upstream`, persisting into `prefs`.
pub fn config_for(upstream: &str, prefs: &Path) -> GatewayConfig {
    let dir = config_dir();
    let mut cfg = GatewayConfig::load(dir.join("irf.json")).unwrap();
    cfg.recommender_base_url = upstream.to_owned();
    cfg.user_service_base_url = upstream.to_owned();
    cfg.item_service_base_url = upstream.to_owned();
    cfg.persistence_path = prefs.to_owned();
    cfg
}

pub struct Harness {
    pub base: String,
    pub gateway: Arc<Gateway>,
    pub mock: Arc<MockServices>,
    pub clock: Arc<ManualClock>,
    pub prefs: TempDir,
    pub http: reqwest::Client,
}

impl Harness {
    pub async fn start(scale: ScoreScale) -> Self {
        Self::start_with(scale, |_| {}).await
    }

    pub async fn start_with(scale: ScoreScale, tweak: impl FnOnce(&mut GatewayConfig)) -> Self {
        let (upstream, mock) = start_mock(scale).await;
        let prefs = tempfile::tempdir().unwrap();
        let mut cfg = config_for(&upstream, prefs.path());
        tweak(&mut cfg);
        let clock = Arc::new(ManualClock::new(START));
        let gateway = Arc::new(Gateway::bootstrap(cfg, clock.clone()).await.unwrap());
        let (addr, _) = http::spawn(gateway.clone(), localhost()).await.unwrap();
        Self {
            base: format!("http://{addr}"),
            gateway,
            mock,
            clock,
            prefs,
            http: reqwest::Client::new(),
        }
    }

    pub async fn open(&self, user_id: &str) -> String {
        let resp = self
            .http
            .post(format!("{}/session", self.base))
            .json(&json!({ "user_id": user_id }))
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), 201);
        resp.json::<Value>().await.unwrap()["session_id"]
            .as_str()
            .unwrap()
            .to_owned()
    }

    pub async fn say(&self, sid: &str, text: &str) -> Value {
        let resp = self
            .http
            .post(format!("{}/session/{sid}/message", self.base))
            .json(&json!({ "text": text }))
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), 200, "turn `{text}`");
        resp.json().await.unwrap()
    }

    pub async fn close(&self, sid: &str) -> reqwest::Response {
        self.http
            .delete(format!("{}/session/{sid}", self.base))
            .send()
            .await
            .unwrap()
    }
}

/// One transcript block per turn: the utterance, the reply text and the
/// payload as compact JSON.
pub fn transcript_block(text: &str, reply: &Value) -> String {
    let payload_type = reply["payload_type"].as_str().unwrap_or("none");
    format!(
        "> {text}\n{}\n[{payload_type}] {}\n\n",
        reply["reply"].as_str().unwrap(),
        reply["payload"]
    )
}

/// Item ids of a rec_list payload, in rank order.
pub fn ranked_ids(reply: &Value) -> Vec<String> {
    reply["payload"]["items"]
        .as_array()
        .map(|items| {
            items
                .iter()
                .map(|i| i["item_id"].as_str().unwrap().to_owned())
                .collect()
        })
        .unwrap_or_default()
}
