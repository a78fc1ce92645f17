//! Served API:
//!
//! | method | path                   | body -> reply                              |
//! |--------|------------------------|--------------------------------------------|
//! | POST   | `/session`             | `{user_id}` -> 201 `{session_id}`          |
//! | POST   | `/session/{sid}/message` | `{text}` -> `{reply, payload_type, payload}` |
//! | DELETE | `/session/{sid}`       | -> `{merged_features}`                     |
//! | GET    | `/health`              | -> `{status: "ok"}`                        |

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::clients::UpstreamError;
use crate::service::{Gateway, GatewayError};

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let status = match &self {
            GatewayError::SessionNotFound(_) | GatewayError::UserNotFound(_) => StatusCode::NOT_FOUND,
            GatewayError::Upstream(UpstreamError::NotFound(_)) => StatusCode::NOT_FOUND,
            GatewayError::Upstream(_) => StatusCode::BAD_GATEWAY,
            GatewayError::Persistence(_) | GatewayError::Setup(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Deserialize)]
struct OpenRequest {
    user_id: String,
}

#[derive(Deserialize)]
struct MessageRequest {
    text: String,
}

type Shared = Arc<Gateway>;

async fn open(State(gw): State<Shared>, Json(req): Json<OpenRequest>) -> Result<Response, GatewayError> {
    let session_id = gw.open_session(&req.user_id).await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": session_id }))).into_response())
}

async fn message(
    State(gw): State<Shared>,
    Path(sid): Path<String>,
    Json(req): Json<MessageRequest>,
) -> Result<Response, GatewayError> {
    Ok(Json(gw.handle_message(&sid, &req.text).await?).into_response())
}

async fn close(State(gw): State<Shared>, Path(sid): Path<String>) -> Result<Response, GatewayError> {
    let merged = gw.close_session(&sid).await?;
    Ok(Json(json!({ "merged_features": merged })).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(gateway: Shared) -> Router {
    Router::new()
        .route("/session", post(open))
        .route("/session/{sid}/message", post(message))
        .route("/session/{sid}", delete(close))
        .route("/health", get(health))
        .with_state(gateway)
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub async fn spawn(gateway: Shared, addr: SocketAddr) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(gateway);
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("gateway stopped: {e}");
        }
    });
    Ok((local, handle))
}
