//! HTTP API over tutoring sessions.
//!
//! Every mutating request runs under its session's lock and appends the
//! events it produced before the lock is released, so each session's log
//! has a single writer.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tutor_core::logic::{NodeId, Rule};
use tutor_core::policy::{Condition, Timestamp};
use tutor_core::session::{Curriculum, InteractionEvent, Session, SessionError, SessionSnapshot};

use crate::store::{LogStore, StoreError};

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

/// Milliseconds since the Unix epoch.
pub fn system_clock() -> Clock {
    Arc::new(|| {
        let ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
        Timestamp(ms)
    })
}

pub struct AppState {
    curriculum: Arc<Curriculum>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    store: Option<LogStore>,
    clock: Clock,
}

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("session {session}: {source}")]
    Replay { session: String, source: SessionError },
}

impl AppState {
    pub fn new(curriculum: Arc<Curriculum>, store: Option<LogStore>, clock: Clock) -> Self {
        AppState { curriculum, sessions: RwLock::new(HashMap::new()), store, clock }
    }

    /// Rebuilds every session found in the store by replaying its log.
    pub fn recover(curriculum: Arc<Curriculum>, store: LogStore, clock: Clock) -> Result<Self, RecoveryError> {
        let mut sessions = HashMap::new();
        for (name, events) in store.load_all()? {
            let session = Session::replay(curriculum.clone(), &events)
                .map_err(|source| RecoveryError::Replay { session: name.clone(), source })?;
            sessions.insert(session.id().to_string(), Arc::new(Mutex::new(session)));
        }
        Ok(AppState { curriculum, sessions: RwLock::new(sessions), store: Some(store), clock })
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn snapshot(&self, id: &str) -> Option<SessionSnapshot> {
        self.get(id).ok().map(|s| s.lock().expect("session lock").snapshot())
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().expect("registry lock").get(id).cloned().ok_or_else(|| ApiError::UnknownSession(id.into()))
    }

    fn now(&self, requested: Option<u64>) -> Timestamp {
        requested.map_or_else(|| (self.clock)(), Timestamp)
    }

    /// Runs `op` under the session lock and persists whatever it logged.
    fn with_session<T>(
        &self,
        id: &str,
        op: impl FnOnce(&mut Session) -> Result<T, SessionError>,
    ) -> Result<(T, SessionSnapshot), ApiError> {
        let handle = self.get(id)?;
        let mut session = handle.lock().expect("session lock");
        let before = session.events().len();
        let result = op(&mut session);
        self.persist(&session, before)?;
        let value = result.map_err(|e| ApiError::Engine(e, Some(Box::new(session.snapshot()))))?;
        Ok((value, session.snapshot()))
    }

    fn persist(&self, session: &Session, from: usize) -> Result<(), ApiError> {
        match &self.store {
            Some(store) => Ok(store.append(session.id(), &session.events()[from..])?),
            None => Ok(()),
        }
    }

    /// Ticks every session once at the current clock time.
    pub fn sweep(&self) -> usize {
        let now = (self.clock)();
        let mut issued = 0;
        for id in self.session_ids() {
            if let Ok(Some(_)) = self.with_session(&id, |s| s.tick(now)).map(|(h, _)| h) {
                issued += 1;
            }
        }
        issued
    }
}

/// Ticks all sessions every `period` until the runtime shuts down.
pub fn spawn_sweeper(state: Arc<AppState>, period: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            let issued = state.sweep();
            if issued > 0 {
                tracing::info!(issued, "inactivity messages issued");
            }
        }
    })
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Engine(SessionError, Option<Box<SessionSnapshot>>),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl ApiError {
    fn status_and_code(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ApiError::BadRequest(_) => (StatusCode::UNPROCESSABLE_ENTITY, "bad_request"),
            ApiError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
            ApiError::Engine(e, _) => match e {
                SessionError::MalformedFormula(_) => (StatusCode::UNPROCESSABLE_ENTITY, "malformed_formula"),
                SessionError::UnknownNode(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_node"),
                SessionError::WrongPhase { .. } => (StatusCode::CONFLICT, "wrong_phase"),
                SessionError::SkipLimitReached => (StatusCode::CONFLICT, "skip_limit"),
                SessionError::NoAlternativeProblem => (StatusCode::CONFLICT, "no_alternative_problem"),
                SessionError::NotPending(_) => (StatusCode::CONFLICT, "not_pending"),
                SessionError::ClockRegression { .. } => (StatusCode::CONFLICT, "clock_regression"),
                SessionError::BankIncomplete(_) | SessionError::InvalidBank(_) => {
                    (StatusCode::INTERNAL_SERVER_ERROR, "bank")
                }
                SessionError::Hint(_) => (StatusCode::INTERNAL_SERVER_ERROR, "hint"),
                SessionError::ReplayDiverged { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "replay"),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = self.status_and_code();
        let mut body = json!({ "error": code, "feedback": self.to_string() });
        if let ApiError::Engine(_, Some(snapshot)) = &self {
            body["session"] = serde_json::to_value(snapshot).expect("snapshots serialize");
        }
        (status, Json(body)).into_response()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    student: String,
    condition: String,
    seed: u64,
    #[serde(default)]
    now: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRequest {
    sources: Vec<u32>,
    rule: String,
    derived: String,
    #[serde(default)]
    now: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TimeRequest {
    #[serde(default)]
    now: Option<u64>,
}

#[derive(Serialize)]
struct SessionBody {
    session: SessionSnapshot,
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

fn parse_optional<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/events", get(get_events))
        .route("/sessions/:id/steps", post(submit_step))
        .route("/sessions/:id/hint", post(request_hint))
        .route("/sessions/:id/skip", post(skip))
        .route("/sessions/:id/restart", post(restart))
        .route("/sessions/:id/next", post(next_example))
        .route("/sessions/:id/assertions/:node/delete", post(delete_assertion))
        .route("/sessions/:id/tick", post(tick))
        .with_state(state)
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_required(&body)?;
    let condition: Condition = req.condition.parse().map_err(ApiError::BadRequest)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::create(id.clone(), req.student, condition, req.seed, app.curriculum.clone(), app.now(req.now))
        .map_err(|e| ApiError::Engine(e, None))?;
    app.persist(&session, 0)?;
    let snapshot = session.snapshot();
    app.sessions.write().expect("registry lock").insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(SessionBody { session: snapshot })).into_response())
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "sessions": app.session_ids() }))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionBody>, ApiError> {
    let snapshot = app.snapshot(&id).ok_or(ApiError::UnknownSession(id))?;
    Ok(Json(SessionBody { session: snapshot }))
}

async fn get_events(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<InteractionEvent>>, ApiError> {
    let handle = app.get(&id)?;
    let events = handle.lock().expect("session lock").events().to_vec();
    Ok(Json(events))
}

async fn submit_step(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: StepRequest = parse_required(&body)?;
    let rule: Rule = req.rule.parse().map_err(|e| ApiError::BadRequest(format!("{e}")))?;
    let sources: Vec<NodeId> = req.sources.into_iter().map(NodeId).collect();
    let now = app.now(req.now);
    let (outcome, snapshot) = app.with_session(&id, |s| s.submit_step(&sources, rule, &req.derived, now))?;
    if !outcome.verdict.is_valid() {
        let body = json!({
            "error": "invalid_step",
            "feedback": outcome.verdict.feedback,
            "outcome": outcome,
            "session": snapshot,
        });
        return Ok((StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response());
    }
    Ok(Json(json!({ "outcome": outcome, "session": snapshot })).into_response())
}

async fn request_hint(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let now = app.now(parse_optional::<TimeRequest>(&body)?.now);
    let (hint, snapshot) = app.with_session(&id, |s| s.request_hint(now))?;
    Ok(Json(json!({ "hint": hint, "message": hint.message_text(), "session": snapshot })))
}

async fn tick(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let now = app.now(parse_optional::<TimeRequest>(&body)?.now);
    let (hint, snapshot) = app.with_session(&id, |s| s.tick(now))?;
    Ok(Json(json!({ "hint": hint, "session": snapshot })))
}

async fn skip(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionBody>, ApiError> {
    let now = app.now(parse_optional::<TimeRequest>(&body)?.now);
    let ((), session) = app.with_session(&id, |s| s.skip_problem(now))?;
    Ok(Json(SessionBody { session }))
}

async fn restart(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionBody>, ApiError> {
    let now = app.now(parse_optional::<TimeRequest>(&body)?.now);
    let ((), session) = app.with_session(&id, |s| s.restart_problem(now))?;
    Ok(Json(SessionBody { session }))
}

async fn next_example(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionBody>, ApiError> {
    let now = app.now(parse_optional::<TimeRequest>(&body)?.now);
    let ((), session) = app.with_session(&id, |s| s.advance_example(now))?;
    Ok(Json(SessionBody { session }))
}

async fn delete_assertion(
    State(app): State<Arc<AppState>>,
    Path((id, node)): Path<(String, u32)>,
    body: Bytes,
) -> Result<Json<SessionBody>, ApiError> {
    let now = app.now(parse_optional::<TimeRequest>(&body)?.now);
    let ((), session) = app.with_session(&id, |s| s.delete_assertion(NodeId(node), now))?;
    Ok(Json(SessionBody { session }))
}
