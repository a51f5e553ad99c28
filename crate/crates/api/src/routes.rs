use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use choreo_core::parser::parse;
use choreo_core::session::{AmendSession, Candidates, HistoryEntry, Violation};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::error::{ApiError, ParseProblem};
use crate::{AppState, SessionHandle};

type Shared = State<Arc<AppState>>;

pub(crate) fn router(state: Arc<AppState>) -> Router {
    let origins: Vec<HeaderValue> = state.config.cors_origins.iter().filter_map(|o| o.parse().ok()).collect();
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(state_of))
        .route("/sessions/{id}/violations/{vid}/options", get(options))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/audit", get(audit))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .layer(DefaultBodyLimit::max(state.config.body_limit))
        .layer(cors)
        .with_state(state)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionState {
    session_id: String,
    text: String,
    fingerprint: String,
    well_asserted: bool,
    violations: Vec<Violation>,
    history: Vec<HistoryEntry>,
    history_length: usize,
}

fn describe(id: &str, s: &AmendSession) -> SessionState {
    SessionState {
        session_id: id.to_string(),
        text: s.text(),
        fingerprint: s.fingerprint(),
        well_asserted: s.violations().is_empty(),
        violations: s.violations().to_vec(),
        history: s.history().to_vec(),
        history_length: s.history().len(),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

fn lookup(state: &AppState, id: &str) -> Result<SessionHandle, ApiError> {
    state.session(id).ok_or_else(|| ApiError::NotFound(format!("unknown session {id}")))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
struct CreateRequest {
    source: String,
}

/// Accepts `{"source": "..."}` or the assertion text itself.
async fn create(State(state): Shared, body: String) -> Result<impl IntoResponse, ApiError> {
    let source = match serde_json::from_str::<CreateRequest>(&body) {
        Ok(r) => r.source,
        Err(_) => body,
    };
    let parsed = parse(&source).map_err(choreo_core::session::SessionError::from)?;
    let defects = parsed.defects();
    if !defects.is_empty() {
        let problems = defects.into_iter().map(|(d, span)| ParseProblem { message: d.to_string(), span }).collect();
        return Err(ApiError::Unprocessable(problems));
    }
    let solver = state.solver.clone();
    let session = blocking(move || Ok(AmendSession::from_source(&source, solver)?)).await?;
    let body = {
        let id = state.insert(session);
        let handle = lookup(&state, &id)?;
        let s = handle.read().expect("session lock");
        let d = describe(&id, &s);
        json!({
            "sessionId": d.session_id,
            "text": d.text,
            "fingerprint": d.fingerprint,
            "wellAsserted": d.well_asserted,
            "violations": d.violations,
            "parseErrors": [],
        })
    };
    Ok((StatusCode::CREATED, Json(body)))
}

async fn state_of(State(state): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let handle = lookup(&state, &id)?;
    let s = handle.read().expect("session lock");
    Ok(Json(describe(&id, &s)))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OptionsResponse {
    violation: Violation,
    #[serde(flatten)]
    candidates: Candidates,
}

async fn options(State(state): Shared, Path((id, vid)): Path<(String, String)>) -> Result<impl IntoResponse, ApiError> {
    let handle = lookup(&state, &id)?;
    let response = blocking(move || {
        let s = handle.read().expect("session lock");
        let violation = s.violation(&vid).cloned().ok_or_else(|| ApiError::NotFound(format!("unknown violation {vid}")))?;
        let candidates = s.options(&vid)?;
        Ok(OptionsResponse { violation, candidates })
    })
    .await?;
    Ok(Json(response))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ApplyRequest {
    option_id: String,
}

async fn apply(
    State(state): Shared,
    Path(id): Path<String>,
    Json(req): Json<ApplyRequest>,
) -> Result<impl IntoResponse, ApiError> {
    let handle = lookup(&state, &id)?;
    let response = blocking(move || {
        let mut s = handle.write().expect("session lock");
        let choice = s.apply(&req.option_id)?;
        let d = describe(&id, &s);
        Ok(json!({ "applied": choice, "state": d }))
    })
    .await?;
    Ok(Json(response))
}

async fn undo(State(state): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let handle = lookup(&state, &id)?;
    let response = blocking(move || {
        let mut s = handle.write().expect("session lock");
        s.undo()?;
        Ok(describe(&id, &s))
    })
    .await?;
    Ok(Json(response))
}

async fn audit(State(state): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let handle = lookup(&state, &id)?;
    let body = handle.read().expect("session lock").audit_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body))
}

async fn snapshot(State(state): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let handle = lookup(&state, &id)?;
    let snap = handle.read().expect("session lock").snapshot();
    Ok(Json(snap))
}
