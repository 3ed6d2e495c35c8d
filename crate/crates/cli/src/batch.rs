//! Headless sessions driven by scripted feedback on a simulated clock.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use explain_loop::eval::EvalError;
use explain_loop::session::{EventSink, ManualClock, SessionEvent, SkipReason};
use explain_loop::{
    compute_metrics, Engine, MetricsReport, Session, SessionError, SessionMode, TaskBundle, TerminalKind,
};

pub const DEFAULT_THINK_TIME_MS: u64 = 20_000;

fn default_think_time() -> u64 {
    DEFAULT_THINK_TIME_MS
}

/// How a scripted run ends once its feedback is used up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finish {
    #[default]
    Complete,
    SkipUnclear,
    SkipUnsolvable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedRun {
    pub task_id: String,
    pub mode: SessionMode,
    #[serde(default)]
    pub scripted_feedback: Vec<String>,
    #[serde(default)]
    pub expected_terminal: Option<TerminalKind>,
    /// Simulated time the user spends before each action.
    #[serde(default = "default_think_time")]
    pub think_time_ms: u64,
    #[serde(default)]
    pub finish: Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub task_id: String,
    pub session_id: Option<String>,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub terminal: Option<TerminalKind>,
    pub success: Option<bool>,
    pub turns: usize,
    /// `None` when the run names no expected terminal kind.
    pub expectation_met: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub runs: Vec<RunResult>,
    pub events: Vec<SessionEvent>,
    pub report: MetricsReport,
}

/// Keeps a copy of every event and forwards it.
struct Tee<'a> {
    events: Vec<SessionEvent>,
    out: &'a mut dyn EventSink,
}

impl EventSink for Tee<'_> {
    fn emit(&mut self, event: &SessionEvent) {
        self.events.push(event.clone());
        self.out.emit(event);
    }
}

enum Step {
    Continue,
    /// The deadline passed; the session is already terminal.
    Expired,
    Abort(String),
}

fn step(session: &Session, result: Result<(), SessionError>) -> Step {
    match result {
        Err(SessionError::DeadlineExceeded { .. }) => Step::Expired,
        Err(e) => Step::Abort(e.to_string()),
        // A notice means the model step failed; a scripted user cannot react.
        Ok(()) => match &session.notice {
            Some(n) if !session.state.is_terminal() => Step::Abort(n.message.clone()),
            _ => Step::Continue,
        },
    }
}

fn run_one(
    engine: &Engine,
    clock: &ManualClock,
    task: &TaskBundle,
    run: &ScriptedRun,
    sink: &mut dyn EventSink,
) -> RunResult {
    let mut result = RunResult {
        task_id: run.task_id.clone(),
        session_id: None,
        status: RunStatus::Error,
        error: None,
        terminal: None,
        success: None,
        turns: 0,
        expectation_met: None,
    };
    // Each feedback message adds a turn after the first.
    if run.scripted_feedback.len() + 1 > engine.settings().max_turns {
        result.error = Some(format!(
            "{} scripted feedback messages exceed the turn cap of {}",
            run.scripted_feedback.len(),
            engine.settings().max_turns
        ));
        return result;
    }
    let mut session = match engine.start_session(task.clone(), run.mode, sink) {
        Ok(s) => s,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    result.session_id = Some(session.session_id.clone());

    let mut outcome = step(&session, Ok(()));
    let mut feedback = run.scripted_feedback.iter();
    while matches!(outcome, Step::Continue) && !session.state.is_terminal() {
        clock.advance(run.think_time_ms);
        let r = match feedback.next() {
            Some(text) => engine.submit_feedback(&mut session, text, sink),
            None => {
                let r = match run.finish {
                    Finish::Complete => engine.complete_session(&mut session, sink),
                    Finish::SkipUnclear => engine.skip_session(&mut session, SkipReason::UnclearQuestion, sink),
                    Finish::SkipUnsolvable => engine.skip_session(&mut session, SkipReason::Unsolvable, sink),
                };
                outcome = step(&session, r);
                break;
            }
        };
        outcome = step(&session, r);
    }

    result.turns = session.turns.len();
    if let Step::Abort(message) = outcome {
        result.error = Some(message);
        return result;
    }
    let terminal = session.outcome.map(|o| o.kind);
    result.status = RunStatus::Ok;
    result.terminal = terminal;
    result.success = session.outcome.map(|o| o.final_verdict.success);
    result.expectation_met = run.expected_terminal.map(|k| Some(k) == terminal);
    result
}

/// Runs every script through `engine`, whose clock must be `clock`.
/// Failures are recorded per run; only an unusable event log fails the
/// whole batch.
pub fn run_batch(
    engine: &Engine,
    clock: &ManualClock,
    tasks: &[TaskBundle],
    runs: &[ScriptedRun],
    sink: &mut dyn EventSink,
) -> Result<BatchOutcome, EvalError> {
    let by_id: HashMap<&str, &TaskBundle> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let mut tee = Tee {
        events: Vec::new(),
        out: sink,
    };
    let mut results = Vec::with_capacity(runs.len());
    for run in runs {
        let Some(task) = by_id.get(run.task_id.as_str()) else {
            results.push(RunResult {
                task_id: run.task_id.clone(),
                session_id: None,
                status: RunStatus::Error,
                error: Some(format!("unknown task {}", run.task_id)),
                terminal: None,
                success: None,
                turns: 0,
                expectation_met: None,
            });
            continue;
        };
        results.push(run_one(engine, clock, task, run, &mut tee));
    }
    let report = compute_metrics(&tee.events, tasks)?;
    Ok(BatchOutcome {
        runs: results,
        events: tee.events,
        report,
    })
}
