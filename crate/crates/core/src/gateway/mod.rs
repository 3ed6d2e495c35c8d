//! The only place model calls happen.
//!
//! Network access goes through a [`Transport`]; everything else in the crate
//! sees a `Gateway` that can also answer from a cassette. Tests and batch
//! runs use [`ScriptedTransport`] or replay, so they never touch the network.

mod cassette;
mod http;

use std::collections::{HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::prompt::PromptBundle;

pub use cassette::{read_records, Cassette, CassetteError, CompletionRecord};
pub use http::HttpTransport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub credential_ref: String,
    pub timeout_ms: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model_name: "gpt-3.5-turbo-0613".into(),
            temperature: 0.0,
            max_output_tokens: 512,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            credential_ref: "OPENAI_API_KEY".into(),
            timeout_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    Live,
    Replay,
    RecordThenReplay,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no cassette record for prompt {0}")]
    CassetteMiss(String),
    #[error("provider error{}: {body}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    ProviderError { status: Option<u16>, body: String },
    #[error("model call timed out after {elapsed_ms} ms")]
    Timeout { elapsed_ms: u64 },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cassette(#[from] CassetteError),
}

/// Sends one prompt to a model and returns the reply text.
pub trait Transport: Send + Sync {
    fn send(&self, bundle: &PromptBundle, config: &ModelConfig) -> Result<String, GatewayError>;
}

/// Replies from a fixed queue, in order. Counts calls so tests can assert
/// that replay never reached it.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<String>>,
    calls: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedTransport {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl Transport for ScriptedTransport {
    fn send(&self, _bundle: &PromptBundle, _config: &ModelConfig) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.replies
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .pop_front()
            .ok_or_else(|| GatewayError::ProviderError {
                status: None,
                body: "scripted transport has no replies left".into(),
            })
    }
}

pub struct Gateway {
    transport: Arc<dyn Transport>,
    cassette: Option<Arc<Cassette>>,
    overwrite: bool,
    /// Fingerprints recorded by this gateway; with `overwrite` these replay
    /// while older records for the same prompt are re-recorded.
    fresh: Mutex<HashSet<String>>,
}

impl Gateway {
    pub fn new(transport: Arc<dyn Transport>, cassette: Option<Arc<Cassette>>) -> Self {
        Gateway {
            transport,
            cassette,
            overwrite: false,
            fresh: Mutex::new(HashSet::new()),
        }
    }

    /// Replay-only gateway; any attempt to reach the transport is an error.
    pub fn replay_only(cassette: Arc<Cassette>) -> Self {
        Gateway::new(Arc::new(ScriptedTransport::default()), Some(cassette))
    }

    pub fn with_overwrite(mut self, overwrite: bool) -> Self {
        self.overwrite = overwrite;
        self
    }

    pub fn cassette(&self) -> Option<&Arc<Cassette>> {
        self.cassette.as_ref()
    }

    pub fn complete(
        &self,
        bundle: &PromptBundle,
        config: &ModelConfig,
        mode: GatewayMode,
    ) -> Result<String, GatewayError> {
        if config.temperature.is_nan() || config.temperature < 0.0 {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature {} is negative",
                config.temperature
            )));
        }
        match mode {
            GatewayMode::Live => self.transport.send(bundle, config),
            GatewayMode::Replay => self
                .cassette
                .as_ref()
                .and_then(|c| c.get(&bundle.fingerprint))
                .map(|r| r.response_text)
                .ok_or_else(|| GatewayError::CassetteMiss(bundle.fingerprint.clone())),
            GatewayMode::RecordThenReplay => self.record_then_replay(bundle, config),
        }
    }

    fn record_then_replay(&self, bundle: &PromptBundle, config: &ModelConfig) -> Result<String, GatewayError> {
        let Some(cassette) = &self.cassette else {
            return Err(GatewayError::InvalidConfig("record mode needs a cassette".into()));
        };
        if let Some(hit) = cassette.get(&bundle.fingerprint) {
            let fresh = self
                .fresh
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .contains(&bundle.fingerprint);
            if !self.overwrite || fresh {
                return Ok(hit.response_text);
            }
        }
        let started = Instant::now();
        let text = self.transport.send(bundle, config)?;
        let record = CompletionRecord {
            fingerprint: bundle.fingerprint.clone(),
            request: bundle.clone(),
            response_text: text.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
            recorded_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        cassette.append(record)?;
        self.fresh
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(bundle.fingerprint.clone());
        tracing::debug!(fingerprint = %bundle.fingerprint, "recorded completion");
        Ok(text)
    }
}
