#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use elmi_llm::LlmClient;
use elmi_studio::app::{fixture_mock_provider, Sources, Studio};
use elmi_studio::store::Store;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn fixtures() -> PathBuf {
    elmi_server::default_fixtures()
}

pub fn studio_on(store: Store) -> Arc<Studio> {
    let client = LlmClient::new(Arc::new(fixture_mock_provider(&fixtures()).unwrap()));
    Arc::new(Studio::new(Arc::new(store), Arc::new(client), Sources::fixtures(fixtures())))
}

pub fn studio() -> Arc<Studio> {
    studio_on(Store::open_in_memory().unwrap())
}

pub struct Response {
    pub status: StatusCode,
    pub replay: bool,
    pub body: Value,
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, key: Option<&str>) -> Response {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(k) = key {
        req = req.header("idempotency-key", k);
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let replay = resp.headers().contains_key("idempotent-replay");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    Response { status, replay, body }
}

pub fn butter() -> Value {
    json!({"title": "Butter", "artist": "BTS", "sign_language": "ASL", "nickname": "Mina"})
}

/// Polls the project until its background job settles.
pub async fn wait_settled(app: &Router, id: &str) -> Value {
    for _ in 0..500 {
        let r = call(app, "GET", &format!("/projects/{id}"), None, None).await;
        assert_eq!(r.status, StatusCode::OK);
        let done = r.body["jobs"].as_array().is_some_and(|jobs| {
            !jobs.is_empty() && jobs.iter().all(|j| j["status"] == "done" || j["status"] == "failed")
        });
        if done && matches!(r.body["status"].as_str(), Some("ready" | "failed")) {
            return r.body;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("project {id} never settled");
}

/// Creates the fixture project over HTTP and waits until it is ready.
pub async fn ready_project(app: &Router) -> String {
    let r = call(app, "POST", "/projects", Some(butter()), None).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    let id = r.body["id"].as_str().unwrap().to_string();
    let view = wait_settled(app, &id).await;
    assert_eq!(view["status"], "ready", "{view}");
    id
}
