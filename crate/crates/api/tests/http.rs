use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use choreo_api::{router, ApiConfig, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn corpus(name: &str) -> String {
    let path = format!("{}/../core/corpus/{name}.ga", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn app() -> (Router, Arc<AppState>) {
    let state = AppState::new(ApiConfig::default());
    (router(state.clone()), state)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => builder.body(Body::from(b.to_string())).unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn create(app: &Router, source: &str) -> (StatusCode, Value) {
    call(app, "POST", "/sessions", Some(json!({ "source": source }))).await
}

fn option_id(options: &Value, tag: &str) -> String {
    options["options"].as_array().unwrap().iter().find(|o| o["tag"] == tag).unwrap()["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health() {
    let (app, _) = app();
    let (status, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok" }));
}

#[tokio::test]
async fn create_reports_violations_or_parse_errors() {
    let (app, _) = app();
    let (status, body) = create(&app, &corpus("walkthrough")).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["violations"].as_array().unwrap().len(), 4);
    assert!(uuid_like(body["sessionId"].as_str().unwrap()));

    let (status, body) = create(&app, "end").await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["violations"], json!([]));

    let (status, body) = create(&app, "rec t<").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["parseErrors"][0]["span"]["line"], 1);

    let (status, _) = create(&app, "A -> A : (x | true)").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

fn uuid_like(s: &str) -> bool {
    s.len() == 36 && s.chars().filter(|c| *c == '-').count() == 4
}

#[tokio::test]
async fn oversized_bodies_are_rejected() {
    let state = AppState::new(ApiConfig { body_limit: 64, ..ApiConfig::default() });
    let app = router(state);
    let (status, _) = create(&app, &corpus("walkthrough")).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn walkthrough_over_http() {
    let (app, _) = app();
    let (_, body) = create(&app, &corpus("walkthrough")).await;
    let id = body["sessionId"].as_str().unwrap().to_string();

    let (status, line4) = call(&app, "GET", &format!("/sessions/{id}/violations/hs-4/options"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(line4["options"].as_array().unwrap().len(), 2);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/violations/hs-77/options"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let phi1 = option_id(&line4, "phi1");
    let (status, applied) = call(&app, "POST", &format!("/sessions/{id}/apply"), Some(json!({ "optionId": phi1 }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(applied["state"]["violations"].as_array().unwrap().len(), 3);
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/apply"), Some(json!({ "optionId": phi1 }))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (_, line5) = call(&app, "GET", &format!("/sessions/{id}/violations/hs-5/options"), None).await;
    let phi2 = option_id(&line5, "phi2");
    let (status, applied) = call(&app, "POST", &format!("/sessions/{id}/apply"), Some(json!({ "optionId": phi2 }))).await;
    assert_eq!(status, StatusCode::OK);
    let remaining: Vec<&str> =
        applied["state"]["violations"].as_array().unwrap().iter().map(|v| v["kind"].as_str().unwrap()).collect();
    assert_eq!(remaining, vec!["TS", "TS"]);

    let (_, state) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(state["historyLength"], 2);

    let (_, call_opts) = call(&app, "GET", &format!("/sessions/{id}/violations/ts-8/options"), None).await;
    let lift = option_id(&call_opts, "phi3-lift");
    call(&app, "POST", &format!("/sessions/{id}/apply"), Some(json!({ "optionId": lift }))).await;
    let (status, last) = call(&app, "GET", &format!("/sessions/{id}/violations/ts-10/options"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(last["options"], json!([]));
    let summary = last["diagnostics"]["summary"].as_str().unwrap();
    assert!(summary.contains("Alice") && summary.contains("Carol"), "{summary}");

    let (status, state) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["historyLength"], 2);

    let (status, audit) = call(&app, "GET", &format!("/sessions/{id}/audit"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(audit.as_str().unwrap().lines().count() >= 4);
}

#[tokio::test]
async fn undo_on_a_fresh_session_conflicts() {
    let (app, _) = app();
    let (_, body) = create(&app, &corpus("increasing")).await;
    let id = body["sessionId"].as_str().unwrap();
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn sessions_are_independent() {
    let (app, _) = app();
    let (_, a) = create(&app, &corpus("walkthrough")).await;
    let (_, b) = create(&app, &corpus("walkthrough")).await;
    let (a, b) = (a["sessionId"].as_str().unwrap(), b["sessionId"].as_str().unwrap());
    assert_ne!(a, b);
    let (_, opts) = call(&app, "GET", &format!("/sessions/{a}/violations/hs-4/options"), None).await;
    let phi1 = option_id(&opts, "phi1");
    call(&app, "POST", &format!("/sessions/{a}/apply"), Some(json!({ "optionId": phi1 }))).await;
    let (_, sb) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(sb["historyLength"], 0);
    assert_eq!(sb["text"], corpus("walkthrough"));
}

#[tokio::test]
async fn snapshots_are_written_on_shutdown() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(ApiConfig { snapshot_dir: Some(dir.path().to_path_buf()), ..ApiConfig::default() });
    let app = router(state.clone());
    create(&app, &corpus("increasing")).await;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    choreo_api::serve(listener, state, async {}).await.unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
