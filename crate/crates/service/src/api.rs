//! HTTP/JSON session service.
//!
//! The engine is shared read-only; each session sits behind its own mutex so
//! commands for one session run one at a time while different sessions
//! proceed in parallel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use conceptnav_core::corpus::{ConceptId, VideoId};
use conceptnav_core::gateway::{
    dispatch, map_command, recognize_gesture, CommandMap, Event, GestureParams, NavigationCommand,
    Outcome, StateSnapshot, Token,
};
use conceptnav_core::navigation::{CloudEntry, Engine, Session};
use conceptnav_core::weighting::RankedVideo;
use conceptnav_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(30 * 60);

struct Slot {
    session: Session,
    last_used: Instant,
}

pub struct AppState {
    engine: Engine,
    command_map: CommandMap,
    gesture_params: GestureParams,
    ttl: Duration,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Slot>>>>,
}

impl AppState {
    pub fn new(engine: Engine, command_map: CommandMap) -> Self {
        AppState {
            engine,
            command_map,
            gesture_params: GestureParams::default(),
            ttl: DEFAULT_SESSION_TTL,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn with_gesture_params(mut self, params: GestureParams) -> Self {
        self.gesture_params = params;
        self
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// Drops sessions idle for longer than the TTL; returns how many.
    pub fn expire_idle(&self) -> usize {
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        // A slot that is locked is in use right now, so it is not idle.
        sessions.retain(|_, slot| match slot.try_lock() {
            Ok(s) => s.last_used.elapsed() <= self.ttl,
            Err(_) => true,
        });
        before - sessions.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn create(&self) -> Session {
        self.expire_idle();
        let session = self.engine.start_session();
        let slot = Slot {
            session: session.clone(),
            last_used: Instant::now(),
        };
        self.sessions.lock().unwrap().insert(
            session.id().to_string(),
            Arc::new(tokio::sync::Mutex::new(slot)),
        );
        session
    }

    /// Runs `f` with exclusive access to the session.
    async fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&Engine, &mut Session) -> Result<T, Error>,
    ) -> Result<T, ApiError> {
        self.expire_idle();
        let slot = self
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "unknown_session",
                    format!("no session {id}"),
                )
            })?;
        let mut slot = slot.lock().await;
        slot.last_used = Instant::now();
        Ok(f(&self.engine, &mut slot.session)?)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::UnknownConcept(_)
            | Error::UnknownVideo(_)
            | Error::UnknownContext(_)
            | Error::UnknownNode(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::InvalidTransition { .. }
            | Error::ConceptNotReachable { .. }
            | Error::AtRoot
            | Error::FocusOutOfRange { .. } => (StatusCode::CONFLICT, "invalid_transition"),
            Error::Parse(_) | Error::InvalidInput(_) => (StatusCode::BAD_REQUEST, "bad_request"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

/// Request bodies must be JSON objects; serde alone would also accept a
/// positional array for a struct.
fn object<T: DeserializeOwned>(body: Result<Json<Value>, JsonRejection>) -> Result<T, ApiError> {
    let Json(value) = body?;
    if !value.is_object() {
        return Err(ApiError::bad_request("request body must be a JSON object"));
    }
    serde_json::from_value(value).map_err(|e| ApiError::bad_request(e.to_string()))
}

type ApiResult<T> = Result<Json<T>, ApiError>;
type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/contexts", get(contexts))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/select-context", post(select_context))
        .route("/sessions/{id}/select-concept", post(select_concept))
        .route("/sessions/{id}/cloud", get(cloud))
        .route("/sessions/{id}/videos", get(videos))
        .route("/sessions/{id}/map", get(map))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/back", post(back))
        .route("/sessions/{id}/events", post(events))
        .route("/sessions/{id}/query", get(query))
        .with_state(state)
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    concepts: usize,
    videos: usize,
    sessions: usize,
}

async fn health(State(state): Shared) -> Json<Health> {
    Json(Health {
        status: "ok",
        concepts: state.engine.index().concepts().len(),
        videos: state.engine.index().videos().len(),
        sessions: state.session_count(),
    })
}

async fn contexts(State(state): Shared) -> Json<Vec<conceptnav_core::corpus::Context>> {
    Json(state.engine.contexts().to_vec())
}

async fn create_session(State(state): Shared) -> (StatusCode, Json<Session>) {
    (StatusCode::CREATED, Json(state.create()))
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> ApiResult<Session> {
    state
        .with_session(&id, |_, s| Ok(s.clone()))
        .await
        .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectContext {
    num: u32,
}

#[derive(Serialize)]
struct CloudResponse {
    session: Session,
    cloud: Vec<CloudEntry>,
}

async fn select_context(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<CloudResponse> {
    let body: SelectContext = object(body)?;
    state
        .with_session(&id, |e, s| {
            let cloud = e.select_context(s, body.num)?;
            Ok(CloudResponse {
                session: s.clone(),
                cloud,
            })
        })
        .await
        .map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectConcept {
    id: ConceptId,
}

#[derive(Serialize)]
struct ConceptResponse {
    session: Session,
    #[serde(flatten)]
    view: conceptnav_core::navigation::ConceptView,
}

async fn select_concept(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<ConceptResponse> {
    let body: SelectConcept = object(body)?;
    state
        .with_session(&id, |e, s| {
            let view = e.select_concept(s, body.id)?;
            Ok(ConceptResponse {
                session: s.clone(),
                view,
            })
        })
        .await
        .map(Json)
}

async fn cloud(State(state): Shared, Path(id): Path<String>) -> ApiResult<Vec<CloudEntry>> {
    state.with_session(&id, |e, s| e.cloud(s)).await.map(Json)
}

#[derive(Serialize)]
struct VideosResponse {
    concept: ConceptId,
    videos: Vec<RankedVideo>,
}

async fn videos(State(state): Shared, Path(id): Path<String>) -> ApiResult<VideosResponse> {
    state
        .with_session(&id, |e, s| {
            let videos = e.ranking(s)?;
            Ok(VideosResponse {
                concept: s
                    .selected_concept()
                    .expect("ranking implies a selected concept"),
                videos,
            })
        })
        .await
        .map(Json)
}

async fn map(
    State(state): Shared,
    Path(id): Path<String>,
) -> ApiResult<conceptnav_core::navigation::Layout2D> {
    state
        .with_session(&id, |e, s| e.video_map(s))
        .await
        .map(Json)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Feedback {
    #[serde(default)]
    relevant: Vec<VideoId>,
    #[serde(default)]
    non_relevant: Vec<VideoId>,
}

async fn feedback(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<VideosResponse> {
    let body: Feedback = object(body)?;
    state
        .with_session(&id, |e, s| {
            let videos = e.apply_feedback(s, &body.relevant, &body.non_relevant)?;
            Ok(VideosResponse {
                concept: s
                    .selected_concept()
                    .expect("feedback implies a selected concept"),
                videos,
            })
        })
        .await
        .map(Json)
}

async fn back(State(state): Shared, Path(id): Path<String>) -> ApiResult<Session> {
    state
        .with_session(&id, |e, s| {
            e.back(s)?;
            Ok(s.clone())
        })
        .await
        .map(Json)
}

#[derive(Serialize)]
struct EventResponse {
    token: Token,
    /// Absent when the token is not bound to any action.
    command: Option<NavigationCommand>,
    outcome: Option<Outcome>,
    state: StateSnapshot,
}

async fn events(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<EventResponse> {
    let event: Event = object(body)?;
    let token = match &event {
        Event::Gesture(trace) => Token::Gesture(recognize_gesture(trace, &state.gesture_params)?),
        Event::Voice(text) => Token::voice(text),
    };
    let map = &state.command_map;
    state
        .with_session(&id, |e, s| {
            let focused = e.focused_item(s)?;
            let command = map_command(&token, map, s.level(), focused.as_ref())?;
            let outcome = command.as_ref().map(|c| dispatch(e, s, c)).transpose()?;
            Ok(EventResponse {
                token: token.clone(),
                command,
                outcome,
                state: StateSnapshot::from(&*s),
            })
        })
        .await
        .map(Json)
}

#[derive(Deserialize)]
struct QueryParams {
    text: String,
}

#[derive(Serialize)]
struct QueryHit {
    concept: ConceptId,
    name: String,
    pertinence: f64,
}

async fn query(
    State(state): Shared,
    Path(id): Path<String>,
    params: Result<Query<QueryParams>, QueryRejection>,
) -> ApiResult<Vec<QueryHit>> {
    let Query(params) = params?;
    state
        .with_session(&id, |e, _| {
            let hits = e.text_query(&params.text)?;
            Ok(hits
                .into_iter()
                .map(|c| QueryHit {
                    concept: c,
                    name: e
                        .index()
                        .concept(c)
                        .expect("hit is a corpus concept")
                        .name
                        .clone(),
                    pertinence: e.pertinence(c),
                })
                .collect())
        })
        .await
        .map(Json)
}

/// Serves until ctrl-c, sweeping idle sessions once a minute.
pub async fn serve(state: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let sweeper = {
        let state = Arc::clone(&state);
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                state.expire_idle();
            }
        })
    };
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweeper.abort();
    result
}
