//! Append-only session transcripts, one JSON event per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Event, Notice, SessionMode, SessionState, TerminalOutcome, Turn};
use crate::db::SqlValue;
use crate::sandbox::{CaseResult, ExecStatus, ExecutionOutcome, SuccessVerdict};

/// Execution result as written to transcripts: no wall time, so replays
/// produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionSummary {
    pub status: ExecStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sql_rows: Vec<Vec<SqlValue>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub case_results: Vec<CaseResult>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub stderr_excerpt: String,
}

impl From<&ExecutionOutcome> for ExecutionSummary {
    fn from(o: &ExecutionOutcome) -> Self {
        ExecutionSummary {
            status: o.status,
            columns: o.columns.clone(),
            sql_rows: o.sql_rows.clone(),
            case_results: o.case_results.clone(),
            stderr_excerpt: o.stderr_excerpt.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub index: usize,
    pub code: String,
    pub explanation: String,
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionSummary>,
    pub verdict: SuccessVerdict,
    pub prompts_used: Vec<String>,
    pub created_at_ms: u64,
}

impl From<&Turn> for TurnRecord {
    fn from(t: &Turn) -> Self {
        TurnRecord {
            index: t.index,
            code: t.code.clone(),
            explanation: t.explanation.clone(),
            reply: t.reply.clone(),
            execution: t.execution.as_ref().map(ExecutionSummary::from),
            verdict: t.verdict,
            prompts_used: t.prompts_used.clone(),
            created_at_ms: t.created_at_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventBody {
    SessionCreated {
        task_id: String,
        mode: SessionMode,
        deadline_ms: u64,
    },
    StateChanged {
        from: SessionState,
        to: SessionState,
        trigger: Event,
    },
    TurnAdded {
        turn: TurnRecord,
    },
    /// Feedback text as typed; `turn_index` is the turn it answers.
    Feedback {
        turn_index: Option<usize>,
        text: String,
    },
    Notice {
        notice: Notice,
    },
    Terminal {
        outcome: TerminalOutcome,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    pub at_ms: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Receives session events as they happen.
pub trait EventSink {
    fn emit(&mut self, event: &SessionEvent);
}

impl EventSink for Vec<SessionEvent> {
    fn emit(&mut self, event: &SessionEvent) {
        self.push(event.clone());
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _: &SessionEvent) {}
}

/// Writes one JSON line per event. The first write error is kept and every
/// later event is dropped.
#[derive(Debug)]
pub struct JsonlSink<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out, error: None }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> EventSink for JsonlSink<W> {
    fn emit(&mut self, event: &SessionEvent) {
        if self.error.is_some() {
            return;
        }
        let line = serde_json::to_string(event).expect("events serialize");
        if let Err(e) = writeln!(self.out, "{line}") {
            self.error = Some(e);
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("transcript is not readable: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Parses a JSONL transcript. Blank lines are skipped.
pub fn parse_transcript<R: BufRead>(input: R) -> Result<Vec<SessionEvent>, TranscriptError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| TranscriptError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(event);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandbox::VerdictReason;
    use crate::session::TerminalKind;

    #[test]
    fn events_round_trip_through_jsonl() {
        let events = vec![
            SessionEvent {
                session_id: "s0001".into(),
                at_ms: 0,
                body: EventBody::StateChanged {
                    from: SessionState::AwaitingFeedback,
                    to: SessionState::TimedOut,
                    trigger: Event::Tick { expired: true },
                },
            },
            SessionEvent {
                session_id: "s0001".into(),
                at_ms: 5,
                body: EventBody::Terminal {
                    outcome: TerminalOutcome {
                        kind: TerminalKind::Timeout,
                        final_verdict: SuccessVerdict::from_reason(VerdictReason::ResultsDiffer),
                        elapsed_ms: 5,
                    },
                },
            },
        ];
        let mut sink = JsonlSink::new(Vec::new());
        for e in &events {
            sink.emit(e);
        }
        let bytes = sink.finish().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(
            text.lines().next().unwrap().contains(r#""event":"state_changed""#),
            "{text}"
        );
        assert_eq!(parse_transcript(&bytes[..]).unwrap(), events);
    }

    #[test]
    fn malformed_line_is_reported_with_its_number() {
        let text = "\n{\"session_id\":\"s\",\"at_ms\":1,\"event\":\"nope\"}\n";
        match parse_transcript(text.as_bytes()) {
            Err(TranscriptError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
