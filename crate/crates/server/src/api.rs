//! Routes, error bodies, idempotency keys and the event stream.

use std::collections::HashSet;
use std::convert::Infallible;
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body};
use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use elmi_core::ProjectId;
use elmi_studio::analytics::Scope;
use elmi_studio::app::{AppError, Event, NewProject, Studio};
use elmi_studio::chat::TurnInput;
use elmi_studio::pipeline::Stage;
use elmi_studio::playback::PlaybackMode;
use elmi_studio::records::Intent;
use futures::{Stream, StreamExt};
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::sync::broadcast::error::RecvError;

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
pub const REPLAY_HEADER: &str = "idempotent-replay";
const MAX_BODY_BYTES: usize = 1 << 20;

pub struct ApiState {
    pub studio: Arc<Studio>,
    in_flight: Mutex<HashSet<String>>,
}

type Shared = Arc<ApiState>;

pub fn router(studio: Arc<Studio>) -> Router {
    let state = Arc::new(ApiState { studio, in_flight: Mutex::new(HashSet::new()) });
    Router::new()
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/:id", get(get_project))
        .route("/projects/:id/lines", get(get_lines))
        .route("/projects/:id/lines/:n/gloss", put(put_gloss))
        .route("/projects/:id/lines/:n/suggestions", get(suggestions))
        .route("/projects/:id/lines/:n/thread", post(open_thread))
        .route("/projects/:id/threads", get(thread_summaries))
        .route("/projects/:id/preprocess", post(preprocess))
        .route("/projects/:id/playback", get(playback))
        .route("/projects/:id/analytics", get(analytics))
        .route("/projects/:id/export", get(export))
        .route("/projects/:id/events", get(events))
        .route("/threads/:id", get(get_thread))
        .route("/threads/:id/messages", post(post_message))
        .fallback(|| async { ApiError(AppError::NotFound("no such route".into())) })
        .layer(middleware::from_fn_with_state(state.clone(), idempotency))
        .with_state(state)
}

/// An [`AppError`] rendered as `{code, message, details}`.
#[derive(Debug)]
pub struct ApiError(pub AppError);

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &AppError) -> StatusCode {
    match e {
        AppError::BadRequest(_) => StatusCode::BAD_REQUEST,
        AppError::NotFound(_) => StatusCode::NOT_FOUND,
        AppError::Conflict { .. } => StatusCode::CONFLICT,
        AppError::Busy(_) => StatusCode::LOCKED,
        AppError::NotReady(_) | AppError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
        AppError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"code": self.0.code(), "message": self.0.to_string(), "details": self.0.details()});
        (status_of(&self.0), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn bad_request(e: impl std::fmt::Display) -> ApiError {
    ApiError(AppError::BadRequest(e.to_string()))
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v).map_err(|e| bad_request(e.body_text()))
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> ApiResult<T> {
    p.map(|Path(v)| v).map_err(|e| bad_request(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| bad_request(e.body_text()))
}

/// Runs studio work off the async executor.
async fn blocking<T, F>(state: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Studio) -> Result<T, AppError> + Send + 'static,
{
    let studio = state.studio.clone();
    tokio::task::spawn_blocking(move || f(&studio))
        .await
        .map_err(|e| ApiError(AppError::Internal(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

async fn create_project(State(s): State<Shared>, b: Result<Json<NewProject>, JsonRejection>) -> ApiResult<Response> {
    let req = body(b)?;
    let project = blocking(&s, move |st| st.create_project(&req)).await?;
    let id = project.id.clone();
    let studio = s.studio.clone();
    // Failures are recorded on the job and the project status.
    tokio::task::spawn_blocking(move || studio.process(&id));
    Ok((StatusCode::CREATED, Json(project)).into_response())
}

async fn list_projects(State(s): State<Shared>) -> ApiResult<Response> {
    let projects = blocking(&s, |st| Ok(st.store.list_projects()?)).await?;
    Ok(Json(projects).into_response())
}

async fn get_project(State(s): State<Shared>, p: Result<Path<String>, PathRejection>) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    Ok(Json(blocking(&s, move |st| st.project_view(&id)).await?).into_response())
}

async fn get_lines(State(s): State<Shared>, p: Result<Path<String>, PathRejection>) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    Ok(Json(blocking(&s, move |st| st.lines(&id)).await?).into_response())
}

#[derive(Deserialize)]
struct GlossPut {
    raw: String,
    expected_version: u32,
}

async fn put_gloss(
    State(s): State<Shared>,
    p: Result<Path<(String, usize)>, PathRejection>,
    b: Result<Json<GlossPut>, JsonRejection>,
) -> ApiResult<Response> {
    let (id, n) = path(p)?;
    let req = body(b)?;
    let line = blocking(&s, move |st| st.put_gloss(&ProjectId(id), n, &req.raw, req.expected_version)).await?;
    Ok(Json(line).into_response())
}

#[derive(Deserialize)]
struct SuggestionQuery {
    #[serde(default)]
    partial: String,
}

async fn suggestions(
    State(s): State<Shared>,
    p: Result<Path<(String, usize)>, PathRejection>,
    q: Result<Query<SuggestionQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let (id, n) = path(p)?;
    let partial = query(q)?.partial;
    let list = blocking(&s, move |st| st.suggestions(&ProjectId(id), n, &partial)).await?;
    Ok(Json(json!({ "suggestions": list })).into_response())
}

#[derive(Deserialize, Default)]
struct ThreadOpen {
    #[serde(default)]
    proactive: bool,
}

async fn open_thread(
    State(s): State<Shared>,
    p: Result<Path<(String, usize)>, PathRejection>,
    b: Result<Json<ThreadOpen>, JsonRejection>,
) -> ApiResult<Response> {
    let (id, n) = path(p)?;
    let proactive = match b {
        Err(JsonRejection::MissingJsonContentType(_)) => false,
        other => body(other)?.proactive,
    };
    let (thread, created) = blocking(&s, move |st| st.open_thread(&ProjectId(id), n, proactive)).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(thread)).into_response())
}

async fn thread_summaries(State(s): State<Shared>, p: Result<Path<String>, PathRejection>) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    Ok(Json(blocking(&s, move |st| st.thread_summaries(&id)).await?).into_response())
}

async fn get_thread(State(s): State<Shared>, p: Result<Path<String>, PathRejection>) -> ApiResult<Response> {
    let id = path(p)?;
    Ok(Json(blocking(&s, move |st| st.thread(&id)).await?).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MessagePost {
    text: Option<String>,
    shortcut_intent: Option<Intent>,
}

async fn post_message(
    State(s): State<Shared>,
    p: Result<Path<String>, PathRejection>,
    b: Result<Json<MessagePost>, JsonRejection>,
) -> ApiResult<Response> {
    let thread_id = path(p)?;
    let input = match body(b)? {
        MessagePost { text: Some(t), shortcut_intent: None } => TurnInput::Manual(t),
        MessagePost { text: None, shortcut_intent: Some(i) } => TurnInput::Shortcut(i),
        _ => return Err(bad_request("send exactly one of `text` or `shortcut_intent`")),
    };
    let turn = blocking(&s, move |st| st.send_message(&thread_id, input)).await?;
    Ok(Json(turn).into_response())
}

#[derive(Deserialize, Default)]
struct PreprocessPost {
    #[serde(default)]
    from_stage: Option<Stage>,
}

async fn preprocess(
    State(s): State<Shared>,
    p: Result<Path<String>, PathRejection>,
    b: Result<Json<PreprocessPost>, JsonRejection>,
) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    let from = match b {
        Err(JsonRejection::MissingJsonContentType(_)) => None,
        other => body(other)?.from_stage,
    };
    let check = id.clone();
    blocking(&s, move |st| {
        st.timed_lyrics(&check)?;
        if st.job_running(&check) {
            return Err(AppError::Busy(format!("a job is already running for project {check}")));
        }
        Ok(())
    })
    .await?;
    let studio = s.studio.clone();
    let job_id = id.clone();
    tokio::task::spawn_blocking(move || studio.preprocess(&job_id, from));
    Ok((StatusCode::ACCEPTED, Json(json!({ "project_id": id.0, "from_stage": from })) ).into_response())
}

#[derive(Deserialize)]
struct PlaybackQuery {
    t: u64,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default, rename = "loop")]
    loop_line: Option<usize>,
}

async fn playback(
    State(s): State<Shared>,
    p: Result<Path<String>, PathRejection>,
    q: Result<Query<PlaybackQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    let q = query(q)?;
    let mode: PlaybackMode = q.mode.as_deref().map_or(Ok(PlaybackMode::Global), str::parse).map_err(bad_request)?;
    Ok(Json(blocking(&s, move |st| st.playback(&id, q.t, mode, q.loop_line)).await?).into_response())
}

#[derive(Deserialize)]
struct AnalyticsQuery {
    #[serde(default)]
    scope: Option<Scope>,
}

async fn analytics(
    State(s): State<Shared>,
    p: Result<Path<String>, PathRejection>,
    q: Result<Query<AnalyticsQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    let scope = query(q)?.scope.unwrap_or(Scope::Project);
    Ok(Json(blocking(&s, move |st| st.analytics(&id, scope)).await?).into_response())
}

async fn export(State(s): State<Shared>, p: Result<Path<String>, PathRejection>) -> ApiResult<Response> {
    let id = ProjectId(path(p)?);
    Ok(Json(blocking(&s, move |st| st.export(&id)).await?).into_response())
}

fn sse_event(e: &Event) -> Result<SseEvent, Infallible> {
    Ok(SseEvent::default().event(e.kind()).data(serde_json::to_string(e).expect("event serializes")))
}

/// Job progress for one project: the latest job first, then live events.
async fn events(
    State(s): State<Shared>,
    p: Result<Path<String>, PathRejection>,
) -> ApiResult<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>> {
    let id = ProjectId(path(p)?);
    // Subscribe before the snapshot so nothing falls in between.
    let rx = s.studio.subscribe();
    let lookup = id.clone();
    let view = blocking(&s, move |st| st.project_view(&lookup)).await?;
    let snapshot: Vec<Event> =
        view.jobs.last().map(|job| Event::JobStatus { project_id: id.0.clone(), job: job.clone() }).into_iter().collect();
    let live = futures::stream::unfold((rx, id.0), |(mut rx, pid)| async move {
        loop {
            match rx.recv().await {
                Ok(e) if e.project_id() == pid => return Some((e, (rx, pid))),
                Ok(_) | Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let stream = futures::stream::iter(snapshot).chain(live).map(|e| sse_event(&e));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

fn fingerprint(method: &Method, uri: &str, body: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(method.as_str());
    h.update([0]);
    h.update(uri);
    h.update([0]);
    h.update(body);
    hex::encode(h.finalize())
}

struct InFlight<'a> {
    set: &'a Mutex<HashSet<String>>,
    key: String,
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.set.lock().expect("in-flight lock").remove(&self.key);
    }
}

/// Replays the stored response when a mutating request repeats an
/// `Idempotency-Key`. Responses are stored unless they are transient
/// (423, 5xx), so a retry after those runs again.
async fn idempotency(State(s): State<Shared>, req: Request, next: Next) -> Response {
    if !matches!(*req.method(), Method::POST | Method::PUT | Method::PATCH | Method::DELETE) {
        return next.run(req).await;
    }
    let Some(key) = req.headers().get(IDEMPOTENCY_HEADER).and_then(|v| v.to_str().ok()).map(str::to_owned) else {
        return next.run(req).await;
    };
    let (parts, raw) = req.into_parts();
    let bytes = match to_bytes(raw, MAX_BODY_BYTES).await {
        Ok(b) => b,
        Err(e) => return bad_request(format!("unreadable body: {e}")).into_response(),
    };
    let print = fingerprint(&parts.method, &parts.uri.to_string(), &bytes);

    let _guard = {
        let mut set = s.in_flight.lock().expect("in-flight lock");
        if !set.insert(key.clone()) {
            return ApiError(AppError::Busy("a request with this idempotency key is in progress".into())).into_response();
        }
        InFlight { set: &s.in_flight, key: key.clone() }
    };
    let lookup = key.clone();
    match blocking(&s, move |st| Ok(st.store.idempotent_response(&lookup)?)).await {
        Ok(Some((stored, status, body))) if stored == print => {
            let status = StatusCode::from_u16(status).unwrap_or(StatusCode::OK);
            let mut resp = (status, body).into_response();
            resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
            resp.headers_mut().insert(REPLAY_HEADER, HeaderValue::from_static("true"));
            return resp;
        }
        Ok(Some(_)) => return bad_request("idempotency key was already used for a different request").into_response(),
        Ok(None) => {}
        Err(e) => return e.into_response(),
    }

    let resp = next.run(Request::from_parts(parts, Body::from(bytes))).await;
    let status = resp.status();
    if status.is_server_error() || status == StatusCode::LOCKED {
        return resp;
    }
    let (parts, raw) = resp.into_parts();
    let Ok(bytes) = to_bytes(raw, usize::MAX).await else {
        return ApiError(AppError::Internal("response body unreadable".into())).into_response();
    };
    let text = String::from_utf8_lossy(&bytes).into_owned();
    let record = blocking(&s, move |st| Ok(st.store.record_idempotent_response(&key, &print, status.as_u16(), &text)?)).await;
    if let Err(e) = record {
        return e.into_response();
    }
    Response::from_parts(parts, Body::from(bytes))
}
