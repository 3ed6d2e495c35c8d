//! Turning command-line choices into a gateway, an engine and a task list.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use explain_loop::eval::EvalError;
use explain_loop::gateway::{Cassette, CassetteError, HttpTransport, ScriptedTransport, Transport};
use explain_loop::session::{Clock, TranscriptError};
use explain_loop::task::load_corpus_auto;
use explain_loop::{DemoStore, Engine, EngineSettings, Gateway, GatewayMode, Sandbox, TaskBundle, TaskError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Cassette(#[from] CassetteError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    BadInput { path: PathBuf, reason: String },
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("server failed: {0}")]
    Server(String),
}

impl CliError {
    /// Stable identifier for the machine-readable error line.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Task(_) => "corpus",
            CliError::Cassette(_) => "cassette",
            CliError::Eval(_) => "eval",
            CliError::Transcript(_) => "transcript",
            CliError::Io { .. } => "io",
            CliError::BadInput { .. } => "bad_input",
            CliError::UnknownTask(_) => "unknown_task",
            CliError::Server(_) => "server",
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Loads every corpus; task ids must be unique across all of them.
pub fn load_tasks(paths: &[PathBuf]) -> Result<Vec<TaskBundle>, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("at least one --corpus is required".into()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in paths {
        let (_, tasks) = load_corpus_auto(p)?;
        for t in tasks {
            if !seen.insert(t.task_id.clone()) {
                return Err(CliError::BadInput {
                    path: p.clone(),
                    reason: format!("task id {} appears in more than one corpus", t.task_id),
                });
            }
            out.push(t);
        }
    }
    Ok(out)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadInput {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Where model replies come from.
pub struct GatewayChoice<'a> {
    pub mode: GatewayMode,
    pub cassette: Option<&'a Path>,
    pub overwrite: bool,
    /// Replies to hand out instead of calling the provider.
    pub scripted: Option<Vec<String>>,
}

pub fn build_gateway(choice: GatewayChoice<'_>) -> Result<Gateway, CliError> {
    let cassette = choice.cassette.map(Cassette::open).transpose()?.map(Arc::new);
    if cassette.is_none() && choice.mode != GatewayMode::Live {
        return Err(CliError::Usage(
            "--cassette is required in replay and record modes".into(),
        ));
    }
    if choice.mode == GatewayMode::Replay {
        if choice.scripted.is_some() {
            return Err(CliError::Usage(
                "--scripted-responses has no effect in replay mode".into(),
            ));
        }
        return Ok(Gateway::replay_only(cassette.expect("checked above")));
    }
    let transport: Arc<dyn Transport> = match choice.scripted {
        Some(replies) => Arc::new(ScriptedTransport::new(replies)),
        None => Arc::new(HttpTransport),
    };
    Ok(Gateway::new(transport, cassette).with_overwrite(choice.overwrite))
}

pub fn build_engine(gateway: Gateway, clock: Arc<dyn Clock>, settings: EngineSettings) -> Engine {
    Engine::new(
        Arc::new(gateway),
        Sandbox::default(),
        Arc::new(DemoStore::shipped()),
        clock,
        settings,
    )
}
