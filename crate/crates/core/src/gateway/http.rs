use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{GatewayError, ModelConfig, Transport};
use crate::prompt::{Message, PromptBundle};

/// Longest provider body kept in an error.
const BODY_EXCERPT: usize = 512;

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: &'a [Message],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Chat-completion client for OpenAI-compatible endpoints.
#[derive(Debug, Default, Clone)]
pub struct HttpTransport;

fn excerpt(body: &str) -> String {
    match body.char_indices().nth(BODY_EXCERPT) {
        Some((cut, _)) => format!("{}...", &body[..cut]),
        None => body.to_string(),
    }
}

impl Transport for HttpTransport {
    fn send(&self, bundle: &PromptBundle, config: &ModelConfig) -> Result<String, GatewayError> {
        let key = std::env::var(&config.credential_ref).map_err(|_| GatewayError::ProviderError {
            status: None,
            body: format!("environment variable {} is not set", config.credential_ref),
        })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let request = ChatRequest {
            model: &config.model_name,
            temperature: config.temperature,
            max_tokens: config.max_output_tokens,
            messages: &bundle.messages,
        };
        let started = Instant::now();
        let transport_error = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => GatewayError::Timeout {
                elapsed_ms: started.elapsed().as_millis() as u64,
            },
            other => GatewayError::ProviderError {
                status: None,
                body: excerpt(&other.to_string()),
            },
        };
        let mut response = agent
            .post(&config.endpoint)
            .header("Authorization", format!("Bearer {key}"))
            .send_json(&request)
            .map_err(transport_error)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(transport_error)?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::ProviderError {
                status: Some(status),
                body: excerpt(&body),
            });
        }
        let parsed: ChatResponse = serde_json::from_str(&body).map_err(|e| GatewayError::ProviderError {
            status: Some(status),
            body: excerpt(&format!("unreadable reply ({e}): {body}")),
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::ProviderError {
                status: Some(status),
                body: excerpt(&format!("reply has no message content: {body}")),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{Purpose, Role};

    #[test]
    fn request_body_shape() {
        let messages = vec![Message::new(Role::System, "s"), Message::new(Role::User, "u")];
        let body = serde_json::to_value(ChatRequest {
            model: "m",
            temperature: 0.0,
            max_tokens: 8,
            messages: &messages,
        })
        .unwrap();
        assert_eq!(
            body,
            serde_json::json!({
                "model": "m", "temperature": 0.0, "max_tokens": 8,
                "messages": [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}]
            })
        );
    }

    #[test]
    fn missing_credential_is_a_provider_error() {
        let cfg = ModelConfig {
            credential_ref: "EXPLAIN_LOOP_TEST_UNSET_KEY".into(),
            ..ModelConfig::default()
        };
        let b = PromptBundle::new(Purpose::CodeGen, vec![Message::new(Role::User, "x")]).unwrap();
        assert!(matches!(
            HttpTransport.send(&b, &cfg),
            Err(GatewayError::ProviderError { status: None, .. })
        ));
    }

    #[test]
    fn closed_port_fails_within_the_deadline() {
        let port = std::net::TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let cfg = ModelConfig {
            endpoint: format!("http://127.0.0.1:{port}/v1/chat/completions"),
            // Any variable that is always set will do; the request never lands.
            credential_ref: "PATH".into(),
            timeout_ms: 2_000,
            ..ModelConfig::default()
        };
        let b = PromptBundle::new(Purpose::CodeGen, vec![Message::new(Role::User, "x")]).unwrap();
        let started = Instant::now();
        let err = HttpTransport.send(&b, &cfg).unwrap_err();
        assert!(
            matches!(err, GatewayError::ProviderError { .. } | GatewayError::Timeout { .. }),
            "{err:?}"
        );
        assert!(started.elapsed() < Duration::from_millis(cfg.timeout_ms + 1_000));
    }

    #[test]
    fn excerpt_truncates_on_char_boundary() {
        let long = "é".repeat(600);
        let e = excerpt(&long);
        assert!(e.ends_with("..."));
        assert_eq!(e.chars().count(), BODY_EXCERPT + 3);
    }
}
