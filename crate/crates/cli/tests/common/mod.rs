#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use explain_loop::gateway::GatewayMode;
use explain_loop::session::ManualClock;
use explain_loop::{Engine, EngineSettings, TaskBundle};
use explain_loop_cli::setup::{build_engine, build_gateway, load_tasks, GatewayChoice};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn cassette() -> PathBuf {
    fixtures().join("cassettes/replay_runs.jsonl")
}

pub fn corpora() -> Vec<PathBuf> {
    vec![fixtures().join("spider"), fixtures().join("mbpp")]
}

pub fn tasks() -> Vec<TaskBundle> {
    load_tasks(&corpora()).unwrap()
}

/// Replays the fixture cassette on a manual clock starting at zero.
pub fn replay_engine(settings: EngineSettings) -> (Engine, Arc<ManualClock>) {
    let gateway = build_gateway(GatewayChoice {
        mode: GatewayMode::Replay,
        cassette: Some(&cassette()),
        overwrite: false,
        scripted: None,
    })
    .unwrap();
    let clock = Arc::new(ManualClock::new(0));
    let settings = EngineSettings {
        gateway_mode: GatewayMode::Replay,
        ..settings
    };
    (build_engine(gateway, clock.clone(), settings), clock)
}
