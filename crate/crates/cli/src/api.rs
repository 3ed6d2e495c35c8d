//! Wire types for the HTTP API and its event stream.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use explain_loop::session::{EventBody, SessionEvent, SessionState, SkipReason};
use explain_loop::SessionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiEventKind {
    /// A new turn (code, execution, explanation) is ready.
    TurnReady,
    AwaitingFeedback,
    Terminal,
    /// The last step failed; the session waits for another try.
    Error,
    /// Any other state change, so clients can show progress.
    StateChanged,
    FeedbackReceived,
}

impl ApiEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ApiEventKind::TurnReady => "turn_ready",
            ApiEventKind::AwaitingFeedback => "awaiting_feedback",
            ApiEventKind::Terminal => "terminal",
            ApiEventKind::Error => "error",
            ApiEventKind::StateChanged => "state_changed",
            ApiEventKind::FeedbackReceived => "feedback_received",
        }
    }
}

/// One entry of a session's event stream. `sequence` starts at 1 and has
/// no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEvent {
    pub session_id: String,
    pub sequence: u64,
    pub kind: ApiEventKind,
    pub at_ms: u64,
    pub payload: Value,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("api payloads serialize")
}

/// Maps an engine event to its stream form. Session creation has no
/// stream event; the create response carries the snapshot.
pub fn api_event_for(event: &SessionEvent) -> Option<(ApiEventKind, Value)> {
    Some(match &event.body {
        EventBody::SessionCreated { .. } => return None,
        EventBody::TurnAdded { turn } => (ApiEventKind::TurnReady, to_value(turn)),
        EventBody::StateChanged { from, to, trigger } => {
            let kind = if *to == SessionState::AwaitingFeedback {
                ApiEventKind::AwaitingFeedback
            } else {
                ApiEventKind::StateChanged
            };
            (kind, json!({ "from": from, "to": to, "trigger": trigger.to_string() }))
        }
        EventBody::Feedback { turn_index, text } => (
            ApiEventKind::FeedbackReceived,
            json!({ "turn_index": turn_index, "text": text }),
        ),
        EventBody::Notice { notice } => (ApiEventKind::Error, to_value(notice)),
        EventBody::Terminal { outcome } => (ApiEventKind::Terminal, to_value(outcome)),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub task_id: String,
    pub mode: SessionMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipRequest {
    pub reason: SkipReason,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}
