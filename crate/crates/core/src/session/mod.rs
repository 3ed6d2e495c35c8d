//! Interactive sessions: generate, execute, explain, collect feedback,
//! correct — until the user accepts, skips, or the clock runs out.

mod clock;
mod engine;
pub mod machine;
mod transcript;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::prompt::{extract_code, vanilla_opening, ChatExchange};
use crate::sandbox::{ExecutionOutcome, SuccessVerdict, VerdictReason};
use crate::task::TaskBundle;

pub use clock::{Clock, ManualClock, SystemClock};
pub use engine::{Engine, EngineSettings, SessionError};
pub use machine::{transition, Event, InvalidTransition};
pub use transcript::{
    parse_transcript, EventBody, EventSink, ExecutionSummary, JsonlSink, NullSink, SessionEvent, TranscriptError,
    TurnRecord,
};

pub const DEFAULT_DEADLINE_MS: u64 = 300_000;
pub const DEFAULT_MAX_TURNS: usize = 20;
/// Allowance for a model call already in flight when the deadline passes.
pub const DEADLINE_GRACE_MS: u64 = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    IntelliExplain,
    Vanilla,
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionMode::IntelliExplain => f.write_str("intelli_explain"),
            SessionMode::Vanilla => f.write_str("vanilla"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingStart,
    Generating,
    Explaining,
    AwaitingFeedback,
    Correcting,
    Completed,
    SkippedUnclearQuestion,
    SkippedUnsolvable,
    TimedOut,
}

impl SessionState {
    pub const ALL: [SessionState; 9] = [
        SessionState::AwaitingStart,
        SessionState::Generating,
        SessionState::Explaining,
        SessionState::AwaitingFeedback,
        SessionState::Correcting,
        SessionState::Completed,
        SessionState::SkippedUnclearQuestion,
        SessionState::SkippedUnsolvable,
        SessionState::TimedOut,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            SessionState::Completed
                | SessionState::SkippedUnclearQuestion
                | SessionState::SkippedUnsolvable
                | SessionState::TimedOut
        )
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("state serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    UnclearQuestion,
    Unsolvable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    CompletedByUser,
    SkipUnclear,
    SkipUnsolvable,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalOutcome {
    pub kind: TerminalKind,
    pub final_verdict: SuccessVerdict,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub code: String,
    /// Empty in vanilla mode.
    pub explanation: String,
    /// The model's reply the code was taken from.
    pub reply: String,
    /// `None` in vanilla mode, where execution results are not shown.
    pub execution: Option<ExecutionOutcome>,
    pub verdict: SuccessVerdict,
    pub user_feedback: Option<String>,
    pub prompts_used: Vec<String>,
    pub created_at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoticeKind {
    CassetteMiss,
    ProviderError,
    ModelTimeout,
    PromptError,
    EmptyReply,
}

/// Why the last pipeline step did not produce a turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    pub kind: NoticeKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub task: TaskBundle,
    pub mode: SessionMode,
    pub state: SessionState,
    pub turns: Vec<Turn>,
    pub started_at_ms: u64,
    pub deadline_ms: u64,
    pub outcome: Option<TerminalOutcome>,
    pub notice: Option<Notice>,
    #[serde(skip)]
    pub(crate) gold: Option<ExecutionOutcome>,
}

impl Session {
    pub fn latest_turn(&self) -> Option<&Turn> {
        self.turns.last()
    }

    /// Verdict the session would end with now.
    pub fn current_verdict(&self) -> SuccessVerdict {
        self.turns
            .last()
            .map(|t| t.verdict)
            .unwrap_or(SuccessVerdict::from_reason(VerdictReason::ExecutionFailed))
    }

    pub fn remaining_ms(&self, now_ms: u64) -> u64 {
        (self.started_at_ms + self.deadline_ms).saturating_sub(now_ms)
    }

    /// Free-chat history: the opening message and every feedback message,
    /// each paired with the reply it got.
    pub fn chat_history(&self) -> Vec<ChatExchange> {
        let mut user = vanilla_opening(&self.task);
        let mut out = Vec::with_capacity(self.turns.len());
        for t in &self.turns {
            out.push(ChatExchange {
                user: std::mem::take(&mut user),
                assistant: t.reply.clone(),
            });
            user = t.user_feedback.clone().unwrap_or_default();
        }
        out
    }
}

pub(crate) fn code_from_reply(reply: &str) -> String {
    extract_code(reply)
}
