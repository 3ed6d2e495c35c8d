mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use explain_loop::session::{ManualClock, NullSink};
use explain_loop::{EngineSettings, Session, SessionMode, SessionState};
use explain_loop_cli::server::spawn_ticker;
use explain_loop_cli::{router, ApiEvent, ApiEventKind, AppState};

const HS_FEEDBACK: &str = "Only show the grade. The ID should not be in the result.";

fn app(settings: EngineSettings) -> (Router, Arc<AppState>, Arc<ManualClock>) {
    let (engine, clock) = common::replay_engine(settings);
    let state = AppState::new(Arc::new(engine), common::tasks());
    (router(state.clone()), state, clock)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn create(app: &Router, task_id: &str) -> Session {
    let (status, body) = call(
        app,
        "POST",
        "/api/sessions",
        Some(json!({"task_id": task_id, "mode": "intelli_explain"})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_value(body).unwrap()
}

/// Reads a whole SSE response (the stream ends after the terminal event).
async fn read_stream(app: Router, uri: String, last_event_id: Option<u64>) -> Vec<(u64, String, ApiEvent)> {
    let mut req = Request::builder().uri(uri);
    if let Some(id) = last_event_id {
        req = req.header("last-event-id", id.to_string());
    }
    let resp = app.oneshot(req.body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "text/event-stream");
    let body = tokio::time::timeout(Duration::from_secs(20), resp.into_body().collect())
        .await
        .expect("stream did not end")
        .unwrap()
        .to_bytes();
    let text = String::from_utf8(body.to_vec()).unwrap();
    text.split("\n\n")
        .filter(|block| block.lines().any(|l| l.starts_with("data:")))
        .map(|block| {
            let field = |name: &str| {
                block
                    .lines()
                    .find_map(|l| l.strip_prefix(name))
                    .map(|v| v.trim_start().to_string())
                    .unwrap_or_default()
            };
            let event: ApiEvent = serde_json::from_str(&field("data:")).unwrap();
            (field("id:").parse().unwrap(), field("event:"), event)
        })
        .collect()
}

#[tokio::test]
async fn replayed_session_over_http() {
    let (app, _, _) = app(EngineSettings::default());
    let (status, tasks) = call(&app, "GET", "/api/tasks", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(tasks.as_array().unwrap().len(), 49);

    let s = create(&app, "sql-hs-grade").await;
    assert_eq!(s.state, SessionState::AwaitingFeedback);
    assert_eq!(s.turns.len(), 1);
    assert!(!s.turns[0].explanation.is_empty());

    let (status, body) = call(
        &app,
        "POST",
        &format!("/api/sessions/{}/feedback", s.session_id),
        Some(json!({"text": HS_FEEDBACK})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let s: Session = serde_json::from_value(body).unwrap();
    assert_eq!(s.turns.len(), 2);
    assert_eq!(s.turns[0].user_feedback.as_deref(), Some(HS_FEEDBACK));
    assert!(s.current_verdict().success);

    let (status, body) = call(&app, "POST", &format!("/api/sessions/{}/complete", s.session_id), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["state"], "completed");
    let (_, got) = call(&app, "GET", &format!("/api/sessions/{}", s.session_id), None).await;
    assert_eq!(got, body);
}

#[tokio::test]
async fn error_statuses_and_bodies() {
    let (app, _, _) = app(EngineSettings::default());
    let (status, body) = call(&app, "GET", "/api/sessions/s9999", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown_session");

    let (status, body) = call(
        &app,
        "POST",
        "/api/sessions",
        Some(json!({"task_id": "nope", "mode": "vanilla"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown_task");

    let s = create(&app, "sql-apt-status").await;
    let feedback = format!("/api/sessions/{}/feedback", s.session_id);
    let (status, body) = call(&app, "POST", &feedback, Some(json!({"text": "   "}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "empty_feedback");

    let (status, _) = call(
        &app,
        "POST",
        &format!("/api/sessions/{}/skip", s.session_id),
        Some(json!({"reason": "unclear_question"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = call(&app, "POST", &feedback, Some(json!({"text": "more"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "invalid_state");
    assert!(
        body["message"].as_str().unwrap().contains("skipped_unclear_question"),
        "{body}"
    );
}

#[tokio::test]
async fn turn_cap_is_a_conflict() {
    let (app, _, _) = app(EngineSettings {
        max_turns: 1,
        ..EngineSettings::default()
    });
    let s = create(&app, "sql-hs-grade").await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/api/sessions/{}/feedback", s.session_id),
        Some(json!({"text": HS_FEEDBACK})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "turn_cap_reached");
}

#[tokio::test]
async fn subscribers_see_the_same_gapless_sequence() {
    let (app, _, _) = app(EngineSettings::default());
    let s = create(&app, "sql-hs-grade").await;
    let uri = format!("/api/sessions/{}/events", s.session_id);
    let first = tokio::spawn(read_stream(app.clone(), uri.clone(), None));
    let second = tokio::spawn(read_stream(app.clone(), uri.clone(), None));
    tokio::time::sleep(Duration::from_millis(50)).await;

    call(
        &app,
        "POST",
        &format!("/api/sessions/{}/feedback", s.session_id),
        Some(json!({"text": HS_FEEDBACK})),
    )
    .await;
    call(&app, "POST", &format!("/api/sessions/{}/complete", s.session_id), None).await;

    let a = first.await.unwrap();
    let b = second.await.unwrap();
    assert_eq!(a, b);
    for (i, (id, name, event)) in a.iter().enumerate() {
        assert_eq!(*id, i as u64 + 1);
        assert_eq!(event.sequence, *id);
        assert_eq!(name, event.kind.as_str());
        assert_eq!(event.session_id, s.session_id);
    }
    let kinds: Vec<_> = a.iter().map(|e| e.2.kind).collect();
    assert_eq!(kinds.first(), Some(&ApiEventKind::StateChanged));
    assert_eq!(kinds.last(), Some(&ApiEventKind::Terminal));
    assert_eq!(kinds.iter().filter(|k| **k == ApiEventKind::TurnReady).count(), 2);
    assert_eq!(
        kinds.iter().filter(|k| **k == ApiEventKind::AwaitingFeedback).count(),
        2
    );
    assert_eq!(
        kinds.iter().filter(|k| **k == ApiEventKind::FeedbackReceived).count(),
        1
    );
    let turn_ready = a.iter().find(|e| e.2.kind == ApiEventKind::TurnReady).unwrap();
    assert_eq!(turn_ready.2.payload["code"], json!(s.turns[0].code));

    // Resuming picks up exactly after the given sequence number.
    let resumed = read_stream(app.clone(), format!("{uri}?after=3"), None).await;
    assert_eq!(resumed, a[3..]);
    let resumed = read_stream(app.clone(), uri.clone(), Some(5)).await;
    assert_eq!(resumed, a[5..]);
    let done = read_stream(app, format!("{uri}?after={}", a.len()), None).await;
    assert!(done.is_empty());
}

#[tokio::test]
async fn server_and_direct_engine_agree() {
    let (app, _, _) = app(EngineSettings::default());
    let s = create(&app, "py-kth-element").await;
    call(
        &app,
        "POST",
        &format!("/api/sessions/{}/feedback", s.session_id),
        Some(json!({"text": "The array does not need to be sorted."})),
    )
    .await;
    let (_, via_http) = call(&app, "POST", &format!("/api/sessions/{}/complete", s.session_id), None).await;

    let (engine, _) = common::replay_engine(EngineSettings::default());
    let task = common::tasks()
        .into_iter()
        .find(|t| t.task_id == "py-kth-element")
        .unwrap();
    let mut direct = engine
        .start_session(task, SessionMode::IntelliExplain, &mut NullSink)
        .unwrap();
    engine
        .submit_feedback(&mut direct, "The array does not need to be sorted.", &mut NullSink)
        .unwrap();
    engine.complete_session(&mut direct, &mut NullSink).unwrap();

    assert_eq!(
        without_wall_time(via_http),
        without_wall_time(serde_json::to_value(&direct).unwrap())
    );
}

/// Drops measured execution times, the only field that varies between runs.
fn without_wall_time(mut v: Value) -> Value {
    match &mut v {
        Value::Object(map) => {
            map.remove("wall_ms");
            for x in map.values_mut() {
                *x = without_wall_time(x.take());
            }
        }
        Value::Array(items) => {
            for x in items {
                *x = without_wall_time(x.take());
            }
        }
        _ => {}
    }
    v
}

#[tokio::test]
async fn ticker_times_out_idle_sessions() {
    let (app, state, clock) = app(EngineSettings {
        deadline_ms: 60_000,
        ..EngineSettings::default()
    });
    let s = create(&app, "sql-apt-status").await;
    let stream = tokio::spawn(read_stream(
        app.clone(),
        format!("/api/sessions/{}/events", s.session_id),
        None,
    ));
    let ticker = spawn_ticker(state, Duration::from_millis(10));

    clock.advance(59_000);
    tokio::time::sleep(Duration::from_millis(60)).await;
    let (_, body) = call(&app, "GET", &format!("/api/sessions/{}", s.session_id), None).await;
    assert_eq!(body["state"], "awaiting_feedback");

    clock.advance(2_000);
    let events = stream.await.unwrap();
    ticker.abort();
    let last = &events.last().unwrap().2;
    assert_eq!(last.kind, ApiEventKind::Terminal);
    assert_eq!(last.payload["kind"], "timeout");
    assert_eq!(last.payload["elapsed_ms"], 61_000);
    let (_, body) = call(&app, "GET", &format!("/api/sessions/{}", s.session_id), None).await;
    assert_eq!(body["state"], "timed_out");
}
