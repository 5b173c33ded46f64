//! HTTP+JSON front end for the session store.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rgl_core::bot::{Decision, RoundResolution, SessionConfig, SessionStore, SessionView};
use rgl_core::{Error, RuleVariant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.into(), message: message.into() } }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::SessionNotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::PolicyUnavailable { .. } => (StatusCode::CONFLICT, "policy_unavailable"),
            Error::SessionState(_) => (StatusCode::CONFLICT, "session_state"),
            Error::InvalidInput(_)
            | Error::InvalidDiscretization(_)
            | Error::InvalidProfile(_)
            | Error::Index(_)
            | Error::Unsupported(_)
            | Error::ResourceBudget { .. } => (StatusCode::BAD_REQUEST, "invalid_input"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    /// Coalition size.
    pub n: usize,
    pub mesh: usize,
    #[serde(default)]
    pub rule: RuleVariant,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub state: SessionView,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub action: Decision,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub resolution: RoundResolution,
    pub state: SessionView,
}

#[derive(Debug, Deserialize)]
struct StateQuery {
    #[serde(default)]
    coach: bool,
}

type Store = Arc<SessionStore>;

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/:id", get(state).delete(delete))
        .route("/sessions/:id/decision", post(decide))
        .with_state(store)
}

/// Store calls may solve a policy on demand, so they run off the reactor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> rgl_core::Result<T> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

async fn health(State(store): State<Store>) -> Json<serde_json::Value> {
    let mut keys = store.policies().keys();
    keys.sort_by_key(|k| (k.opponents, k.mesh, k.rule.to_string()));
    Json(serde_json::json!({ "status": "ok", "policies": keys }))
}

async fn create(
    State(store): State<Store>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(req) = body?;
    let config = SessionConfig {
        opponents: req.n,
        mesh: req.mesh,
        rule: req.rule,
        seed: req.seed.unwrap_or_else(rand_seed),
    };
    let state = blocking(move || store.create(config)).await?;
    Ok((StatusCode::CREATED, Json(Created { session_id: state.session_id.clone(), state })))
}

fn rand_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap_or_default().as_nanos());
    h.finish()
}

async fn state(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<StateQuery>,
) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(blocking(move || store.state(&id, q.coach)).await?))
}

async fn decide(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, JsonRejection>,
) -> Result<Json<DecisionResponse>, ApiError> {
    let Json(req) = body?;
    let (resolution, state) = blocking(move || store.decide(&id, req.action)).await?;
    Ok(Json(DecisionResponse { resolution, state }))
}

async fn delete(State(store): State<Store>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    blocking(move || store.delete(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}
