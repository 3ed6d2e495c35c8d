//! The session state machine as a pure function.
//!
//! | from              | event            | intelli-explain   | vanilla           |
//! |-------------------|------------------|-------------------|-------------------|
//! | AwaitingStart     | Start            | Generating        | Generating        |
//! | Generating        | CodeReady        | Explaining        | AwaitingFeedback  |
//! | Generating        | GatewayFailed    | AwaitingFeedback  | AwaitingFeedback  |
//! | Explaining        | ExplanationReady | AwaitingFeedback  | -                 |
//! | Explaining        | GatewayFailed    | AwaitingFeedback  | -                 |
//! | AwaitingFeedback  | Feedback         | Correcting        | Generating        |
//! | AwaitingFeedback  | Complete         | Completed         | Completed         |
//! | AwaitingFeedback  | SkipUnclear      | SkippedUnclear..  | SkippedUnclear..  |
//! | AwaitingFeedback  | SkipUnsolvable   | SkippedUnsolvable | SkippedUnsolvable |
//! | Correcting        | CodeReady        | Explaining        | -                 |
//! | Correcting        | GatewayFailed    | AwaitingFeedback  | -                 |
//! | any non-terminal  | Tick (expired)   | TimedOut          | TimedOut          |
//! | any               | Tick (not due)   | unchanged         | unchanged         |
//! | terminal          | Tick (expired)   | unchanged         | unchanged         |
//!
//! Everything else is an invalid transition.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{SessionMode, SessionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Start,
    CodeReady,
    ExplanationReady,
    GatewayFailed,
    Feedback,
    Complete,
    SkipUnclear,
    SkipUnsolvable,
    Tick { expired: bool },
}

impl Event {
    pub const ALL: [Event; 10] = [
        Event::Start,
        Event::CodeReady,
        Event::ExplanationReady,
        Event::GatewayFailed,
        Event::Feedback,
        Event::Complete,
        Event::SkipUnclear,
        Event::SkipUnsolvable,
        Event::Tick { expired: false },
        Event::Tick { expired: true },
    ];
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Start => f.write_str("start"),
            Event::CodeReady => f.write_str("code_ready"),
            Event::ExplanationReady => f.write_str("explanation_ready"),
            Event::GatewayFailed => f.write_str("gateway_failed"),
            Event::Feedback => f.write_str("feedback"),
            Event::Complete => f.write_str("complete"),
            Event::SkipUnclear => f.write_str("skip_unclear"),
            Event::SkipUnsolvable => f.write_str("skip_unsolvable"),
            Event::Tick { expired: false } => f.write_str("tick"),
            Event::Tick { expired: true } => f.write_str("tick_expired"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{event} is not allowed in state {state} ({mode} mode)")]
pub struct InvalidTransition {
    pub mode: SessionMode,
    pub state: SessionState,
    pub event: Event,
}

pub fn transition(mode: SessionMode, state: SessionState, event: Event) -> Result<SessionState, InvalidTransition> {
    use Event as E;
    use SessionMode::*;
    use SessionState as S;

    if let E::Tick { expired } = event {
        return Ok(if expired && !state.is_terminal() {
            S::TimedOut
        } else {
            state
        });
    }
    let next = match (state, event, mode) {
        (S::AwaitingStart, E::Start, _) => Some(S::Generating),
        (S::Generating, E::CodeReady, IntelliExplain) => Some(S::Explaining),
        (S::Generating, E::CodeReady, Vanilla) => Some(S::AwaitingFeedback),
        (S::Generating, E::GatewayFailed, _) => Some(S::AwaitingFeedback),
        (S::Explaining, E::ExplanationReady | E::GatewayFailed, IntelliExplain) => Some(S::AwaitingFeedback),
        (S::AwaitingFeedback, E::Feedback, IntelliExplain) => Some(S::Correcting),
        (S::AwaitingFeedback, E::Feedback, Vanilla) => Some(S::Generating),
        (S::AwaitingFeedback, E::Complete, _) => Some(S::Completed),
        (S::AwaitingFeedback, E::SkipUnclear, _) => Some(S::SkippedUnclearQuestion),
        (S::AwaitingFeedback, E::SkipUnsolvable, _) => Some(S::SkippedUnsolvable),
        (S::Correcting, E::CodeReady, IntelliExplain) => Some(S::Explaining),
        (S::Correcting, E::GatewayFailed, IntelliExplain) => Some(S::AwaitingFeedback),
        _ => None,
    };
    next.ok_or(InvalidTransition { mode, state, event })
}
