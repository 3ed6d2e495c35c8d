mod common;

use common::{scripted_engine, task};
use explain_loop::prompt::{build_correction_prompt, DemoStore};
use explain_loop::session::{EventBody, NoticeKind, SessionEvent, SkipReason};
use explain_loop::{EngineSettings, SessionError, SessionMode, SessionState, TerminalKind, VerdictReason};

const GRADE_WRONG: &str = "SELECT ID, grade FROM Highschooler";
const GRADE_RIGHT: &str = "SELECT grade FROM Highschooler";

#[test]
fn first_turn_is_generated_executed_and_explained() {
    let (engine, _, transport) = scripted_engine(
        &[GRADE_WRONG, "What are the ids and grades of all high schoolers?"],
        EngineSettings::default(),
    );
    let mut events: Vec<SessionEvent> = Vec::new();
    let s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut events)
        .unwrap();
    assert_eq!(s.state, SessionState::AwaitingFeedback);
    assert_eq!(s.turns.len(), 1);
    let t = &s.turns[0];
    assert_eq!(t.code, GRADE_WRONG);
    assert_eq!(t.explanation, "What are the ids and grades of all high schoolers?");
    let exec = t.execution.as_ref().unwrap();
    assert_eq!(exec.columns, ["ID", "grade"]);
    assert!(!exec.sql_rows.is_empty());
    assert_eq!(t.verdict.reason, VerdictReason::ResultsDiffer);
    assert_eq!(t.prompts_used.len(), 2);
    assert_eq!(transport.calls(), 2);
    assert!(s.outcome.is_none());
}

#[test]
fn correction_turn_fixes_the_query_and_completion_freezes_its_verdict() {
    let replies = [
        GRADE_WRONG,
        "ids and grades?",
        GRADE_RIGHT,
        "grade of each high schooler?",
    ];
    let (engine, clock, _) = scripted_engine(&replies, EngineSettings::default());
    let mut events: Vec<SessionEvent> = Vec::new();
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut events)
        .unwrap();
    clock.advance(10_000);
    engine
        .submit_feedback(&mut s, "Leave out the ID.", &mut events)
        .unwrap();
    assert_eq!(s.turns.len(), 2);
    assert_eq!(s.turns[0].user_feedback.as_deref(), Some("Leave out the ID."));
    assert_eq!(s.turns[1].verdict.reason, VerdictReason::ResultsMatch);
    clock.advance(5_000);
    engine.complete_session(&mut s, &mut events).unwrap();
    let o = s.outcome.unwrap();
    assert_eq!(o.kind, TerminalKind::CompletedByUser);
    assert!(o.final_verdict.success);
    assert_eq!(o.elapsed_ms, 15_000);
}

#[test]
fn completing_a_wrong_answer_is_a_failure() {
    let (engine, _, _) = scripted_engine(&[GRADE_WRONG, "ids and grades?"], EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    engine.complete_session(&mut s, &mut Vec::new()).unwrap();
    assert!(!s.outcome.unwrap().final_verdict.success);
}

#[test]
fn correction_prompt_embeds_previous_turn_verbatim() {
    let replies = [GRADE_WRONG, "Explanation with  odd   spacing.", GRADE_RIGHT, "fine"];
    let (engine, _, _) = scripted_engine(&replies, EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    let feedback = "  Drop the ID column, please.  ";
    engine.submit_feedback(&mut s, feedback, &mut Vec::new()).unwrap();
    let expected = build_correction_prompt(
        GRADE_WRONG,
        "Explanation with  odd   spacing.",
        feedback,
        &s.task,
        &DemoStore::shipped(),
    )
    .unwrap();
    assert_eq!(s.turns[1].prompts_used[0], expected.fingerprint);
    let last = &expected.messages.last().unwrap().content;
    assert!(last.contains(&format!("Code:\n{GRADE_WRONG}\n")));
    assert!(last.contains("Explanation: Explanation with  odd   spacing.\n"));
    assert!(last.ends_with(&format!("Feedback: {feedback}")));
}

#[test]
fn blank_feedback_is_rejected_without_a_state_change() {
    let (engine, _, transport) = scripted_engine(&[GRADE_WRONG, "x"], EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    let before = s.clone();
    assert!(matches!(
        engine.submit_feedback(&mut s, "   ", &mut Vec::new()),
        Err(SessionError::EmptyFeedback)
    ));
    assert_eq!(s, before);
    assert_eq!(transport.calls(), 2);
}

#[test]
fn feedback_after_the_deadline_times_the_session_out() {
    let (engine, clock, transport) = scripted_engine(&[GRADE_WRONG, "x"], EngineSettings::default());
    let mut events: Vec<SessionEvent> = Vec::new();
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut events)
        .unwrap();
    clock.advance(301_000);
    let err = engine.submit_feedback(&mut s, "more", &mut events).unwrap_err();
    assert!(matches!(err, SessionError::DeadlineExceeded { .. }));
    assert_eq!(s.state, SessionState::TimedOut);
    let o = s.outcome.unwrap();
    assert_eq!(o.kind, TerminalKind::Timeout);
    assert!(o.elapsed_ms <= 300_000 + 2_000);
    assert_eq!(transport.calls(), 2);
    assert!(matches!(events.last().unwrap().body, EventBody::Terminal { .. }));
}

#[test]
fn tick_respects_the_deadline_boundary() {
    let (engine, clock, _) = scripted_engine(&[GRADE_WRONG, "x"], EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    clock.set(299_000);
    assert_eq!(engine.tick(&mut s, &mut Vec::new()), SessionState::AwaitingFeedback);
    clock.set(300_000);
    assert_eq!(engine.tick(&mut s, &mut Vec::new()), SessionState::AwaitingFeedback);
    clock.set(301_000);
    assert_eq!(engine.tick(&mut s, &mut Vec::new()), SessionState::TimedOut);
    let frozen = s.clone();
    clock.set(900_000);
    let mut events: Vec<SessionEvent> = Vec::new();
    assert_eq!(engine.tick(&mut s, &mut events), SessionState::TimedOut);
    assert_eq!(s, frozen);
    assert!(events.is_empty());
}

#[test]
fn terminal_sessions_reject_every_operation() {
    let (engine, _, _) = scripted_engine(&[GRADE_WRONG, "x"], EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    engine
        .skip_session(&mut s, SkipReason::UnclearQuestion, &mut Vec::new())
        .unwrap();
    assert_eq!(s.outcome.unwrap().kind, TerminalKind::SkipUnclear);
    let frozen = s.clone();
    assert!(matches!(
        engine.submit_feedback(&mut s, "x", &mut Vec::new()),
        Err(SessionError::InvalidState(_))
    ));
    assert!(matches!(
        engine.complete_session(&mut s, &mut Vec::new()),
        Err(SessionError::InvalidState(_))
    ));
    assert!(matches!(
        engine.skip_session(&mut s, SkipReason::Unsolvable, &mut Vec::new()),
        Err(SessionError::InvalidState(_))
    ));
    assert_eq!(s, frozen);
}

#[test]
fn operations_outside_awaiting_feedback_are_invalid() {
    let (engine, _, _) = scripted_engine(&[GRADE_WRONG, "x"], EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    // Sessions only rest in AwaitingFeedback or a terminal state; force
    // the in-between state to check the guard.
    s.state = SessionState::Generating;
    assert!(matches!(
        engine.complete_session(&mut s, &mut Vec::new()),
        Err(SessionError::InvalidState(_))
    ));
    assert_eq!(s.state, SessionState::Generating);
}

#[test]
fn vanilla_turns_have_no_explanation_or_execution() {
    let reply = "Sure:\n\n```sql\nSELECT grade FROM Highschooler\n```\nThis lists every grade.";
    let (engine, _, transport) = scripted_engine(&[reply], EngineSettings::default());
    let mut events: Vec<SessionEvent> = Vec::new();
    let s = engine
        .start_session(task("sql-hs-grade"), SessionMode::Vanilla, &mut events)
        .unwrap();
    assert_eq!(transport.calls(), 1);
    let t = &s.turns[0];
    assert_eq!(t.code, GRADE_RIGHT);
    assert_eq!(t.reply, reply);
    assert!(t.explanation.is_empty());
    assert!(t.execution.is_none());
    // Hidden from the user but still judged.
    assert!(t.verdict.success);
    for e in &events {
        if let EventBody::StateChanged { to, .. } = e.body {
            assert!(!matches!(to, SessionState::Explaining | SessionState::Correcting));
        }
    }
}

#[test]
fn vanilla_follow_up_carries_the_history() {
    let (engine, _, _) = scripted_engine(
        &["```sql\nSELECT ID FROM Highschooler\n```", GRADE_RIGHT],
        EngineSettings::default(),
    );
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::Vanilla, &mut Vec::new())
        .unwrap();
    engine
        .submit_feedback(&mut s, "I want grades.", &mut Vec::new())
        .unwrap();
    let history = s.chat_history();
    assert_eq!(history.len(), 2);
    assert_eq!(history[1].user, "I want grades.");
    assert!(s.turns[1].verdict.success);
}

#[test]
fn python_session_runs_the_test_cases() {
    let replies = [
        "def kth_element(arr, n, k):\n    arr.sort()\n    return arr[k - 1]",
        "Sorts the list, then returns the k-th item.",
        "def kth_element(arr, n, k):\n    return arr[k - 1]",
        "Returns the k-th item.",
    ];
    let (engine, _, _) = scripted_engine(&replies, EngineSettings::default());
    let mut s = engine
        .start_session(task("py-kth-element"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    assert_eq!(s.turns[0].verdict.reason, VerdictReason::CaseFailed);
    engine
        .submit_feedback(&mut s, "The array does not need to be sorted.", &mut Vec::new())
        .unwrap();
    assert!(!s.turns[1].code.contains("sort"));
    assert_eq!(s.turns[1].verdict.reason, VerdictReason::AllCasesPassed);
    assert_eq!(s.turns[1].execution.as_ref().unwrap().case_results.len(), 3);
}

#[test]
fn gateway_failure_parks_the_session_with_a_notice() {
    // One reply only: the explanation call finds the script exhausted.
    let (engine, _, _) = scripted_engine(&[GRADE_WRONG], EngineSettings::default());
    let mut events: Vec<SessionEvent> = Vec::new();
    let s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut events)
        .unwrap();
    assert_eq!(s.state, SessionState::AwaitingFeedback);
    assert!(s.turns.is_empty());
    assert_eq!(s.notice.as_ref().unwrap().kind, NoticeKind::ProviderError);
    assert!(events.iter().any(|e| matches!(e.body, EventBody::Notice { .. })));
}

#[test]
fn feedback_after_a_failed_first_step_retries_generation() {
    let (engine, _, _) = scripted_engine(&[GRADE_WRONG], EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    // Still nothing to reply with: parks again, but the call succeeds.
    engine.submit_feedback(&mut s, "try again", &mut Vec::new()).unwrap();
    assert_eq!(s.state, SessionState::AwaitingFeedback);
    assert!(s.notice.is_some());
    engine.complete_session(&mut s, &mut Vec::new()).unwrap();
    assert_eq!(s.outcome.unwrap().final_verdict.reason, VerdictReason::ExecutionFailed);
}

#[test]
fn invalid_task_is_rejected_before_any_model_call() {
    let (engine, _, transport) = scripted_engine(&[GRADE_WRONG, "x"], EngineSettings::default());
    let mut t = task("sql-hs-grade");
    t.question = "  ".into();
    let mut events: Vec<SessionEvent> = Vec::new();
    assert!(matches!(
        engine.start_session(t, SessionMode::IntelliExplain, &mut events),
        Err(SessionError::InvalidTask(_))
    ));
    assert_eq!(transport.calls(), 0);
    assert!(events.is_empty());
}

#[test]
fn turn_cap_stops_runaway_loops() {
    let settings = EngineSettings {
        max_turns: 2,
        ..EngineSettings::default()
    };
    let replies = [GRADE_WRONG, "a", GRADE_WRONG, "b", GRADE_WRONG, "c"];
    let (engine, _, _) = scripted_engine(&replies, settings);
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    engine.submit_feedback(&mut s, "again", &mut Vec::new()).unwrap();
    assert!(matches!(
        engine.submit_feedback(&mut s, "again", &mut Vec::new()),
        Err(SessionError::TurnCapReached { max: 2 })
    ));
    assert_eq!(s.turns.len(), 2);
}

#[test]
fn turns_are_ordered_and_explained_before_feedback() {
    let replies = [GRADE_WRONG, "a", GRADE_WRONG, "b", GRADE_RIGHT, "c"];
    let (engine, clock, _) = scripted_engine(&replies, EngineSettings::default());
    let mut s = engine
        .start_session(task("sql-hs-grade"), SessionMode::IntelliExplain, &mut Vec::new())
        .unwrap();
    for _ in 0..2 {
        clock.advance(1_000);
        engine.submit_feedback(&mut s, "again", &mut Vec::new()).unwrap();
    }
    for (i, t) in s.turns.iter().enumerate() {
        assert_eq!(t.index, i);
        assert!(!t.explanation.is_empty());
        assert!(t.execution.is_some());
    }
    assert!(s.turns.windows(2).all(|w| w[0].created_at_ms < w[1].created_at_ms));
}
