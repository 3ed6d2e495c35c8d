//! HTTP+JSON session API with a server-sent event stream per session.
//!
//! Every state change goes through the engine. Operations on one session
//! run one at a time under that session's lock; reads are served from the
//! last published snapshot and never wait for a running model call.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream::{self, Stream};
use serde::Deserialize;
use tokio::sync::watch;

use explain_loop::session::{EventSink, SessionEvent, SkipReason};
use explain_loop::{Engine, Session, SessionError, TaskBundle};

use crate::api::{api_event_for, ApiEvent, ApiEventKind, CreateSession, ErrorBody, FeedbackRequest, SkipRequest};

/// Ordered, gapless event history of one session.
pub struct EventLog {
    events: Mutex<Vec<ApiEvent>>,
    published: watch::Sender<u64>,
}

impl EventLog {
    fn new() -> Self {
        EventLog {
            events: Mutex::new(Vec::new()),
            published: watch::Sender::new(0),
        }
    }

    fn push(&self, event: &SessionEvent) {
        let Some((kind, payload)) = api_event_for(event) else {
            return;
        };
        let mut events = self.events.lock().unwrap_or_else(|e| e.into_inner());
        let sequence = events.len() as u64 + 1;
        events.push(ApiEvent {
            session_id: event.session_id.clone(),
            sequence,
            kind,
            at_ms: event.at_ms,
            payload,
        });
        drop(events);
        self.published.send_replace(sequence);
    }

    fn after(&self, sequence: u64) -> Vec<ApiEvent> {
        let events = self.events.lock().unwrap_or_else(|e| e.into_inner());
        events.iter().skip(sequence as usize).cloned().collect()
    }

    fn terminal_sequence(&self) -> Option<u64> {
        let events = self.events.lock().unwrap_or_else(|e| e.into_inner());
        events
            .iter()
            .find(|e| e.kind == ApiEventKind::Terminal)
            .map(|e| e.sequence)
    }
}

struct LogSink<'a>(&'a EventLog);

impl EventSink for LogSink<'_> {
    fn emit(&mut self, event: &SessionEvent) {
        self.0.push(event);
    }
}

struct Slot {
    session: Mutex<Session>,
    snapshot: RwLock<Session>,
    log: EventLog,
}

impl Slot {
    fn publish(&self, session: &Session) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = session.clone();
    }

    fn snapshot(&self) -> Session {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

pub struct AppState {
    engine: Arc<Engine>,
    tasks: Vec<TaskBundle>,
    task_index: HashMap<String, usize>,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, tasks: Vec<TaskBundle>) -> Arc<Self> {
        let task_index = tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();
        Arc::new(AppState {
            engine,
            tasks,
            task_index,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_session", format!("no session {id}")))
    }

    fn all_slots(&self) -> Vec<Arc<Slot>> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect()
    }
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.into(),
                message: message.into(),
            },
        }
    }

    fn not_found(error: &str, message: String) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, error, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::InvalidState(_) => (StatusCode::CONFLICT, "invalid_state"),
            SessionError::EmptyFeedback => (StatusCode::UNPROCESSABLE_ENTITY, "empty_feedback"),
            SessionError::TurnCapReached { .. } => (StatusCode::CONFLICT, "turn_cap_reached"),
            SessionError::DeadlineExceeded { .. } => (StatusCode::CONFLICT, "deadline_exceeded"),
            SessionError::InvalidTask(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_task"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn join_error(e: tokio::task::JoinError) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
}

async fn list_tasks(State(state): State<Arc<AppState>>) -> Json<Vec<TaskBundle>> {
    Json(state.tasks.clone())
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let Some(&i) = state.task_index.get(&req.task_id) else {
        return Err(ApiError::not_found("unknown_task", format!("no task {}", req.task_id)));
    };
    let task = state.tasks[i].clone();
    let st = state.clone();
    tokio::task::spawn_blocking(move || {
        let log = EventLog::new();
        let session = st.engine.start_session(task, req.mode, &mut LogSink(&log))?;
        let slot = Arc::new(Slot {
            session: Mutex::new(session.clone()),
            snapshot: RwLock::new(session.clone()),
            log,
        });
        st.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session.session_id.clone(), slot);
        Ok((StatusCode::CREATED, Json(session)))
    })
    .await
    .map_err(join_error)?
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    Ok(Json(state.slot(&id)?.snapshot()))
}

/// Runs one engine operation under the session lock and publishes the
/// result, whether or not the operation succeeded.
async fn operate<F>(state: Arc<AppState>, id: String, op: F) -> Result<Json<Session>, ApiError>
where
    F: FnOnce(&Engine, &mut Session, &mut dyn EventSink) -> Result<(), SessionError> + Send + 'static,
{
    let slot = state.slot(&id)?;
    tokio::task::spawn_blocking(move || {
        let mut session = slot.session.lock().unwrap_or_else(|e| e.into_inner());
        let result = op(&state.engine, &mut session, &mut LogSink(&slot.log));
        slot.publish(&session);
        result.map(|()| Json(session.clone())).map_err(ApiError::from)
    })
    .await
    .map_err(join_error)?
}

async fn post_feedback(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<FeedbackRequest>,
) -> Result<Json<Session>, ApiError> {
    operate(state, id, move |engine, session, sink| {
        engine.submit_feedback(session, &req.text, sink)
    })
    .await
}

async fn post_complete(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    operate(state, id, |engine, session, sink| {
        engine.complete_session(session, sink)
    })
    .await
}

async fn post_skip(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<SkipRequest>,
) -> Result<Json<Session>, ApiError> {
    let reason: SkipReason = req.reason;
    operate(state, id, move |engine, session, sink| {
        engine.skip_session(session, reason, sink)
    })
    .await
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

/// Streams events after `?after=` (or `Last-Event-ID`), then follows the
/// session live. The stream ends once the terminal event has been sent.
async fn stream_events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>, ApiError> {
    let slot = state.slot(&id)?;
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok());
    let cursor = q.after.or(resume).unwrap_or(0);
    let rx = slot.log.published.subscribe();

    struct Cursor {
        slot: Arc<Slot>,
        rx: watch::Receiver<u64>,
        next: u64,
        pending: std::collections::VecDeque<ApiEvent>,
    }
    let start = Cursor {
        slot,
        rx,
        next: cursor,
        pending: Default::default(),
    };
    let events = stream::unfold(start, |mut c| async move {
        loop {
            if let Some(ev) = c.pending.pop_front() {
                c.next = ev.sequence;
                let sse = SseEvent::default()
                    .id(ev.sequence.to_string())
                    .event(ev.kind.as_str())
                    .json_data(&ev)
                    .expect("api events serialize");
                return Some((Ok(sse), c));
            }
            if c.slot.log.terminal_sequence().is_some_and(|t| t <= c.next) {
                return None;
            }
            // Mark the current version seen before reading, so a push that
            // lands in between still wakes us.
            c.rx.borrow_and_update();
            c.pending.extend(c.slot.log.after(c.next));
            if c.pending.is_empty() && c.rx.changed().await.is_err() {
                return None;
            }
        }
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/tasks", get(list_tasks))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/feedback", post(post_feedback))
        .route("/api/sessions/{id}/complete", post(post_complete))
        .route("/api/sessions/{id}/skip", post(post_skip))
        .route("/api/sessions/{id}/events", get(stream_events))
        .with_state(state)
}

/// Times out expired sessions in the background. Sessions busy with an
/// operation are skipped; that operation checks the deadline itself.
pub fn spawn_ticker(state: Arc<AppState>, period: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        loop {
            interval.tick().await;
            let st = state.clone();
            let _ = tokio::task::spawn_blocking(move || {
                for slot in st.all_slots() {
                    let Ok(mut session) = slot.session.try_lock() else {
                        continue;
                    };
                    if session.state.is_terminal() {
                        continue;
                    }
                    st.engine.tick(&mut session, &mut LogSink(&slot.log));
                    slot.publish(&session);
                }
            })
            .await;
        }
    })
}
