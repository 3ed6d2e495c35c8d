use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::transcript::{EventBody, EventSink, SessionEvent, TurnRecord};
use super::{
    machine, Clock, Event, InvalidTransition, Notice, NoticeKind, Session, SessionMode, SessionState, SkipReason,
    TerminalKind, TerminalOutcome, Turn, DEADLINE_GRACE_MS, DEFAULT_DEADLINE_MS, DEFAULT_MAX_TURNS,
};
use crate::gateway::{Gateway, GatewayError, GatewayMode, ModelConfig};
use crate::prompt::{
    build_codegen_prompt, build_correction_prompt, build_description_prompt, build_restatement_prompt,
    build_vanilla_prompt, vanilla_opening, DemoStore, PromptBundle, PromptError,
};
use crate::sandbox::{
    judge_python, judge_sql, ExecutionOutcome, Sandbox, SuccessVerdict, VerdictReason, DEFAULT_CASE_LIMIT_MS,
    DEFAULT_SQL_LIMIT_MS,
};
use crate::task::{TaskBundle, TaskContext, TaskError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub deadline_ms: u64,
    pub max_turns: usize,
    pub grace_ms: u64,
    pub sql_limit_ms: u64,
    pub case_limit_ms: u64,
    pub gateway_mode: GatewayMode,
    pub model: ModelConfig,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            deadline_ms: DEFAULT_DEADLINE_MS,
            max_turns: DEFAULT_MAX_TURNS,
            grace_ms: DEADLINE_GRACE_MS,
            sql_limit_ms: DEFAULT_SQL_LIMIT_MS,
            case_limit_ms: DEFAULT_CASE_LIMIT_MS,
            gateway_mode: GatewayMode::Live,
            model: ModelConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    InvalidState(#[from] InvalidTransition),
    #[error("feedback is empty")]
    EmptyFeedback,
    #[error("session already has {max} turns")]
    TurnCapReached { max: usize },
    #[error("session deadline passed after {elapsed_ms} ms")]
    DeadlineExceeded { elapsed_ms: u64 },
    #[error("task cannot be used: {0}")]
    InvalidTask(#[from] TaskError),
}

/// Drives sessions. Holds no per-session state, so one engine can serve any
/// number of sessions; callers serialise operations on a single session.
pub struct Engine {
    gateway: Arc<Gateway>,
    sandbox: Sandbox,
    store: Arc<DemoStore>,
    clock: Arc<dyn Clock>,
    settings: EngineSettings,
    next_id: AtomicU64,
}

/// What a pipeline run starts from.
enum Input<'a> {
    Fresh,
    Feedback(&'a str),
}

fn notice_for(err: &GatewayError) -> Notice {
    let kind = match err {
        GatewayError::CassetteMiss(_) => NoticeKind::CassetteMiss,
        GatewayError::Timeout { .. } => NoticeKind::ModelTimeout,
        _ => NoticeKind::ProviderError,
    };
    Notice {
        kind,
        message: err.to_string(),
    }
}

fn prompt_notice(err: &PromptError) -> Notice {
    Notice {
        kind: NoticeKind::PromptError,
        message: err.to_string(),
    }
}

impl Engine {
    pub fn new(
        gateway: Arc<Gateway>,
        sandbox: Sandbox,
        store: Arc<DemoStore>,
        clock: Arc<dyn Clock>,
        settings: EngineSettings,
    ) -> Self {
        Engine {
            gateway,
            sandbox,
            store,
            clock,
            settings,
            next_id: AtomicU64::new(1),
        }
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn start_session(
        &self,
        task: TaskBundle,
        mode: SessionMode,
        sink: &mut dyn EventSink,
    ) -> Result<Session, SessionError> {
        task.validate()?;
        let now = self.clock.now_ms();
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let mut session = Session {
            session_id: format!("s{id:04}"),
            task,
            mode,
            state: SessionState::AwaitingStart,
            turns: Vec::new(),
            started_at_ms: now,
            deadline_ms: self.settings.deadline_ms,
            outcome: None,
            notice: None,
            gold: None,
        };
        self.emit(
            &session,
            sink,
            EventBody::SessionCreated {
                task_id: session.task.task_id.clone(),
                mode,
                deadline_ms: session.deadline_ms,
            },
        );
        if let TaskContext::Sql { database_ref, .. } = &session.task.context {
            session.gold = Some(self.sandbox.run_sql(
                &session.task.gold_code,
                database_ref,
                self.settings.sql_limit_ms,
            ));
        }
        self.apply(&mut session, Event::Start, sink)?;
        self.run_pipeline(&mut session, Input::Fresh, sink)?;
        self.expire_after_work(&mut session, sink);
        Ok(session)
    }

    pub fn submit_feedback(
        &self,
        session: &mut Session,
        text: &str,
        sink: &mut dyn EventSink,
    ) -> Result<(), SessionError> {
        self.check_allowed(session, Event::Feedback, sink)?;
        if text.trim().is_empty() {
            return Err(SessionError::EmptyFeedback);
        }
        if session.turns.len() >= self.settings.max_turns {
            return Err(SessionError::TurnCapReached {
                max: self.settings.max_turns,
            });
        }
        let turn_index = session.turns.last_mut().map(|t| {
            t.user_feedback = Some(text.to_string());
            t.index
        });
        self.emit(
            session,
            sink,
            EventBody::Feedback {
                turn_index,
                text: text.to_string(),
            },
        );
        self.apply(session, Event::Feedback, sink)?;
        self.run_pipeline(session, Input::Feedback(text), sink)?;
        self.expire_after_work(session, sink);
        Ok(())
    }

    pub fn complete_session(&self, session: &mut Session, sink: &mut dyn EventSink) -> Result<(), SessionError> {
        self.check_allowed(session, Event::Complete, sink)?;
        self.finish(session, Event::Complete, TerminalKind::CompletedByUser, sink)
    }

    pub fn skip_session(
        &self,
        session: &mut Session,
        reason: SkipReason,
        sink: &mut dyn EventSink,
    ) -> Result<(), SessionError> {
        let (event, kind) = match reason {
            SkipReason::UnclearQuestion => (Event::SkipUnclear, TerminalKind::SkipUnclear),
            SkipReason::Unsolvable => (Event::SkipUnsolvable, TerminalKind::SkipUnsolvable),
        };
        self.check_allowed(session, event, sink)?;
        self.finish(session, event, kind, sink)
    }

    /// Times the session out if its deadline has passed. Returns the state
    /// afterwards.
    pub fn tick(&self, session: &mut Session, sink: &mut dyn EventSink) -> SessionState {
        if !session.state.is_terminal() && self.expired(session) {
            self.time_out(session, sink);
        }
        session.state
    }

    fn expired(&self, session: &Session) -> bool {
        self.clock.now_ms().saturating_sub(session.started_at_ms) > session.deadline_ms
    }

    /// Rejects `event` if the table forbids it, and times the session out
    /// (reporting that to the caller) if the deadline passed first.
    fn check_allowed(&self, session: &mut Session, event: Event, sink: &mut dyn EventSink) -> Result<(), SessionError> {
        machine::transition(session.mode, session.state, event)?;
        if self.expired(session) {
            self.time_out(session, sink);
            return Err(SessionError::DeadlineExceeded {
                elapsed_ms: self.clock.now_ms().saturating_sub(session.started_at_ms),
            });
        }
        Ok(())
    }

    /// A model call may overrun the deadline; the session still ends as a
    /// timeout, but the work that finished is kept.
    fn expire_after_work(&self, session: &mut Session, sink: &mut dyn EventSink) {
        if !session.state.is_terminal() && self.expired(session) {
            self.time_out(session, sink);
        }
    }

    fn time_out(&self, session: &mut Session, sink: &mut dyn EventSink) {
        let elapsed = self
            .clock
            .now_ms()
            .saturating_sub(session.started_at_ms)
            .min(session.deadline_ms + self.settings.grace_ms);
        self.apply(session, Event::Tick { expired: true }, sink)
            .expect("expiry is allowed from every non-terminal state");
        self.set_outcome(session, TerminalKind::Timeout, elapsed, sink);
    }

    fn finish(
        &self,
        session: &mut Session,
        event: Event,
        kind: TerminalKind,
        sink: &mut dyn EventSink,
    ) -> Result<(), SessionError> {
        self.apply(session, event, sink)?;
        let elapsed = self.clock.now_ms().saturating_sub(session.started_at_ms);
        self.set_outcome(session, kind, elapsed, sink);
        Ok(())
    }

    fn set_outcome(&self, session: &mut Session, kind: TerminalKind, elapsed_ms: u64, sink: &mut dyn EventSink) {
        let outcome = TerminalOutcome {
            kind,
            final_verdict: session.current_verdict(),
            elapsed_ms,
        };
        session.outcome = Some(outcome);
        self.emit(session, sink, EventBody::Terminal { outcome });
    }

    fn apply(&self, session: &mut Session, event: Event, sink: &mut dyn EventSink) -> Result<(), InvalidTransition> {
        let from = session.state;
        let to = machine::transition(session.mode, from, event)?;
        session.state = to;
        if to != from {
            self.emit(
                session,
                sink,
                EventBody::StateChanged {
                    from,
                    to,
                    trigger: event,
                },
            );
        }
        Ok(())
    }

    fn emit(&self, session: &Session, sink: &mut dyn EventSink, body: EventBody) {
        sink.emit(&SessionEvent {
            session_id: session.session_id.clone(),
            at_ms: self.clock.now_ms(),
            body,
        });
    }

    fn park(&self, session: &mut Session, notice: Notice, sink: &mut dyn EventSink) -> Result<(), SessionError> {
        tracing::warn!(session = %session.session_id, kind = ?notice.kind, "{}", notice.message);
        session.notice = Some(notice.clone());
        self.emit(session, sink, EventBody::Notice { notice });
        self.apply(session, Event::GatewayFailed, sink)?;
        Ok(())
    }

    fn ask(&self, bundle: &PromptBundle) -> Result<String, GatewayError> {
        self.gateway
            .complete(bundle, &self.settings.model, self.settings.gateway_mode)
    }

    fn generation_prompt(&self, session: &Session, input: &Input<'_>) -> Result<PromptBundle, PromptError> {
        let task = &session.task;
        match (session.mode, input, session.turns.last()) {
            (SessionMode::IntelliExplain, Input::Feedback(fb), Some(last)) => {
                build_correction_prompt(&last.code, &last.explanation, fb, task, &self.store)
            }
            (SessionMode::IntelliExplain, _, _) => build_codegen_prompt(task, &self.store),
            (SessionMode::Vanilla, _, None) => build_vanilla_prompt(task, &[], &vanilla_opening(task)),
            (SessionMode::Vanilla, input, Some(_)) => {
                let message = match input {
                    Input::Feedback(fb) => fb.to_string(),
                    Input::Fresh => vanilla_opening(task),
                };
                build_vanilla_prompt(task, &session.chat_history(), &message)
            }
        }
    }

    fn execute(&self, session: &Session, code: &str) -> (ExecutionOutcome, SuccessVerdict) {
        let task = &session.task;
        match &task.context {
            TaskContext::Sql { database_ref, .. } => {
                let outcome = self.sandbox.run_sql(code, database_ref, self.settings.sql_limit_ms);
                let verdict = match &session.gold {
                    Some(gold) => judge_sql(&outcome, gold, &task.gold_code),
                    None => SuccessVerdict::from_reason(VerdictReason::ExecutionFailed),
                };
                (outcome, verdict)
            }
            TaskContext::Python { .. } => {
                let cases = task.context.test_assertions();
                let outcome = self.sandbox.run_python(code, &cases, self.settings.case_limit_ms);
                let verdict = judge_python(&outcome);
                (outcome, verdict)
            }
        }
    }

    /// Generate (or correct), execute, explain, then wait for the user.
    /// Model and prompt failures park the session with a notice instead of
    /// failing the call; the user can retry with more feedback.
    fn run_pipeline(
        &self,
        session: &mut Session,
        input: Input<'_>,
        sink: &mut dyn EventSink,
    ) -> Result<(), SessionError> {
        let prompt = match self.generation_prompt(session, &input) {
            Ok(p) => p,
            Err(e) => return self.park(session, prompt_notice(&e), sink),
        };
        let reply = match self.ask(&prompt) {
            Ok(r) => r,
            Err(e) => return self.park(session, notice_for(&e), sink),
        };
        let code = super::code_from_reply(&reply);
        if code.is_empty() {
            let notice = Notice {
                kind: NoticeKind::EmptyReply,
                message: "the model reply contained no code".into(),
            };
            return self.park(session, notice, sink);
        }
        let mut prompts_used = vec![prompt.fingerprint.clone()];
        let (outcome, verdict) = self.execute(session, &code);

        let explanation = match session.mode {
            SessionMode::Vanilla => String::new(),
            SessionMode::IntelliExplain => {
                self.apply(session, Event::CodeReady, sink)?;
                let explain_prompt = match &session.task.context {
                    TaskContext::Sql { .. } => build_restatement_prompt(&code, &session.task.question, &self.store),
                    TaskContext::Python { .. } => build_description_prompt(&code, &self.store),
                };
                let explain_prompt = match explain_prompt {
                    Ok(p) => p,
                    Err(e) => return self.park(session, prompt_notice(&e), sink),
                };
                match self.ask(&explain_prompt) {
                    Ok(text) if text.trim().is_empty() => {
                        let notice = Notice {
                            kind: NoticeKind::EmptyReply,
                            message: "the model returned an empty explanation".into(),
                        };
                        return self.park(session, notice, sink);
                    }
                    Ok(text) => {
                        prompts_used.push(explain_prompt.fingerprint.clone());
                        text.trim().to_string()
                    }
                    Err(e) => return self.park(session, notice_for(&e), sink),
                }
            }
        };

        let turn = Turn {
            index: session.turns.len(),
            code,
            explanation,
            reply,
            // Free chat never shows execution results to the user.
            execution: (session.mode == SessionMode::IntelliExplain).then_some(outcome),
            verdict,
            user_feedback: None,
            prompts_used,
            created_at_ms: self.clock.now_ms(),
        };
        let record = TurnRecord::from(&turn);
        session.turns.push(turn);
        session.notice = None;
        self.emit(session, sink, EventBody::TurnAdded { turn: record });
        let done = match session.mode {
            SessionMode::IntelliExplain => Event::ExplanationReady,
            SessionMode::Vanilla => Event::CodeReady,
        };
        self.apply(session, done, sink)?;
        Ok(())
    }
}
