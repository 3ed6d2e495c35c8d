mod common;

use std::process::Command;

use explain_loop::session::{JsonlSink, NullSink};
use explain_loop::{render_report, EngineSettings, ReportFormat, SessionMode, TerminalKind};
use explain_loop_cli::setup::read_json;
use explain_loop_cli::{run_batch, RunStatus, ScriptedRun};

fn fixture_runs() -> Vec<ScriptedRun> {
    read_json(&common::fixtures().join("runs/replay_runs.json")).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(common::fixtures().join("golden").join(name)).unwrap()
}

fn replay_batch(runs: &[ScriptedRun]) -> (explain_loop_cli::BatchOutcome, Vec<u8>) {
    let (engine, clock) = common::replay_engine(EngineSettings::default());
    let mut sink = JsonlSink::new(Vec::new());
    let outcome = run_batch(&engine, &clock, &common::tasks(), runs, &mut sink).unwrap();
    (outcome, sink.finish().unwrap())
}

#[test]
fn replayed_batch_matches_golden_report_and_transcript() {
    let (outcome, transcript) = replay_batch(&fixture_runs());
    assert_eq!(
        render_report(&outcome.report, ReportFormat::PlainTable),
        golden("batch_report.txt")
    );
    assert_eq!(String::from_utf8(transcript).unwrap(), golden("batch_transcript.jsonl"));

    assert!(
        outcome.runs.iter().all(|r| r.status == RunStatus::Ok),
        "{:?}",
        outcome.runs
    );
    assert!(
        outcome.runs.iter().all(|r| r.expectation_met == Some(true)),
        "{:?}",
        outcome.runs
    );
    let terminals: Vec<_> = outcome.runs.iter().map(|r| r.terminal.unwrap()).collect();
    assert_eq!(terminals[4], TerminalKind::SkipUnsolvable);
    assert_eq!(terminals[5], TerminalKind::Timeout);
    assert_eq!(outcome.report.overall.n, 6);
    assert_eq!(outcome.report.overall.successes, 4);
}

#[test]
fn replayed_batch_is_deterministic() {
    let runs = fixture_runs();
    let (a, ta) = replay_batch(&runs);
    let (b, tb) = replay_batch(&runs);
    assert_eq!(ta, tb);
    assert_eq!(a.report, b.report);
    assert_eq!(a.runs, b.runs);
}

#[test]
fn cassette_miss_fails_only_that_run() {
    let mut runs = fixture_runs();
    runs.insert(
        1,
        ScriptedRun {
            task_id: "sql-voter-per-state".into(),
            mode: SessionMode::IntelliExplain,
            scripted_feedback: vec![],
            expected_terminal: None,
            think_time_ms: 20_000,
            finish: Default::default(),
        },
    );
    runs.push(ScriptedRun {
        task_id: "no-such-task".into(),
        ..runs[1].clone()
    });
    let (outcome, _) = replay_batch(&runs);
    assert_eq!(outcome.runs[1].status, RunStatus::Error);
    assert!(
        outcome.runs[1].error.as_deref().unwrap().contains("cassette"),
        "{:?}",
        outcome.runs[1]
    );
    assert_eq!(outcome.runs[7].status, RunStatus::Error);
    let others: Vec<_> = outcome
        .runs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 1 && *i != 7)
        .collect();
    assert!(others.iter().all(|(_, r)| r.status == RunStatus::Ok));
    // The aborted session never ends, so it is reported as incomplete.
    assert_eq!(outcome.report.incomplete_count, 1);
    assert_eq!(outcome.report.overall.n, 6);
}

#[test]
fn empty_batch_gives_a_header_only_report() {
    let (engine, clock) = common::replay_engine(EngineSettings::default());
    let outcome = run_batch(&engine, &clock, &common::tasks(), &[], &mut NullSink).unwrap();
    assert!(outcome.runs.is_empty());
    let text = render_report(&outcome.report, ReportFormat::PlainTable);
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("difficulty"));
}

#[test]
fn scripts_longer_than_the_turn_cap_are_rejected() {
    let (engine, clock) = common::replay_engine(EngineSettings {
        max_turns: 1,
        ..EngineSettings::default()
    });
    let runs = &fixture_runs()[..1];
    let outcome = run_batch(&engine, &clock, &common::tasks(), runs, &mut NullSink).unwrap();
    assert_eq!(outcome.runs[0].status, RunStatus::Error);
    assert!(outcome.runs[0].session_id.is_none());
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_explain-loop"));
    cmd.current_dir(common::fixtures()).env_remove("OPENAI_API_KEY");
    cmd
}

#[test]
fn binary_validates_the_corpora() {
    let out = bin()
        .args(["corpus", "validate", "--corpus", "spider", "--corpus", "mbpp"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["tasks"], 26);
    assert_eq!(lines[1]["tasks"], 23);
}

#[test]
fn binary_batch_replay_prints_the_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("t.jsonl");
    let out = bin()
        .args([
            "batch",
            "--corpus",
            "spider",
            "--corpus",
            "mbpp",
            "--replay",
            "--cassette",
            "cassettes/replay_runs.jsonl",
        ])
        .args(["--runs", "runs/replay_runs.json", "--transcript-out"])
        .arg(&transcript)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("batch_report.txt"));
    assert_eq!(
        std::fs::read_to_string(&transcript).unwrap(),
        golden("batch_transcript.jsonl")
    );
}

#[test]
fn binary_report_on_the_synthetic_log() {
    let out = bin()
        .args([
            "report",
            "--corpus",
            "spider",
            "--corpus",
            "mbpp",
            "--transcript",
            "transcripts/synthetic_10.jsonl",
        ])
        .args(["--annotations", "transcripts/annotations.jsonl"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(&golden("synthetic_report.txt")), "{text}");
    assert!(text.contains("instruction_for_error_correction"), "{text}");
}

#[test]
fn binary_errors_are_json_with_exit_codes() {
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args([
            "batch",
            "--corpus",
            "spider",
            "--replay",
            "--runs",
            "runs/replay_runs.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["corpus", "validate", "--corpus", "does-not-exist"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert!(line["error"].is_string() && line["message"].is_string(), "{stderr}");
}

#[test]
fn live_session_without_credential_reports_a_provider_error() {
    let out = bin()
        .args([
            "session",
            "run",
            "--corpus",
            "spider",
            "--task",
            "sql-hs-grade",
            "--endpoint",
            "http://127.0.0.1:9/v1/chat/completions",
        ])
        .stdin(std::process::Stdio::null())
        .output()
        .unwrap();
    let all = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(all.contains("OPENAI_API_KEY"), "{all}");
}
