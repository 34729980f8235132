#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use dab_core::config::EngineConfig;
use dab_core::engine::Engine;
use dab_server::{router, AppState, SESSION_HEADER};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const SEED: u64 = 7;

pub fn engine() -> Engine {
    Engine::new(EngineConfig::default(), SEED).expect("default engine")
}

pub fn app() -> (AppState, Router) {
    let state = AppState::new(engine());
    (state.clone(), router(state))
}

pub async fn request(app: &Router, method: Method, uri: &str, session: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(s) = session {
        req = req.header(SESSION_HEADER, s);
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, json)
}

pub async fn get(app: &Router, uri: &str) -> Value {
    let (status, body) = request(app, Method::GET, uri, None, None).await;
    assert_eq!(status, StatusCode::OK, "GET {uri}: {body}");
    body
}

pub async fn post(app: &Router, uri: &str, session: Option<&str>, body: Value) -> (StatusCode, Value) {
    request(app, Method::POST, uri, session, Some(body)).await
}

pub async fn session(app: &Router, account: &str) -> String {
    let (status, body) = post(app, "/sessions", None, serde_json::json!({ "account": account })).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

pub fn error_code(body: &Value) -> &str {
    body["error"]["code"].as_str().unwrap_or("")
}
