//! Prompt assembly: code generation, the two explanation styles, error
//! correction and the free-chat baseline.
//!
//! Every builder is pure. Layout is one System instruction, a User/Assistant
//! pair per demonstration, then a final User message for the target.

mod builders;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::task::{Language, TaskError};

pub use builders::{
    build_codegen_prompt, build_correction_prompt, build_description_prompt, build_restatement_prompt,
    build_vanilla_prompt, extract_code, render_task_context, vanilla_opening, ChatExchange, DESCRIPTION_INSTRUCTION,
    RESTATEMENT_INSTRUCTION,
};
pub use store::{CodegenDemo, CorrectionDemo, DemoStore, DescriptionPair, RestatementTriplet, StoreError};

/// Upper bound on the serialized size of a single prompt.
pub const MAX_PROMPT_BYTES: usize = 256 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    CodeGen,
    RestateExplain,
    DescribeExplain,
    ErrorCorrect,
    VanillaChat,
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Purpose::CodeGen => "code_gen",
            Purpose::RestateExplain => "restate_explain",
            Purpose::DescribeExplain => "describe_explain",
            Purpose::ErrorCorrect => "error_correct",
            Purpose::VanillaChat => "vanilla_chat",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub messages: Vec<Message>,
    pub purpose: Purpose,
    pub fingerprint: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("no {purpose} demonstrations{}", language.map(|l| format!(" for {l}")).unwrap_or_default())]
    MissingDemos {
        purpose: Purpose,
        language: Option<Language>,
    },
    #[error("{0} is empty")]
    EmptyInput(&'static str),
    #[error("feedback is empty")]
    EmptyFeedback,
    #[error(transparent)]
    MalformedTask(#[from] TaskError),
    #[error("prompt is {size} bytes, over the {limit}-byte limit")]
    TooLarge { size: usize, limit: usize },
    #[error("prompt must start with a system or user message")]
    BadLayout,
}

/// SHA-256 over the canonical JSON of `messages`, hex encoded.
pub fn fingerprint(messages: &[Message]) -> String {
    let canonical = serde_json::to_vec(messages).expect("messages always serialize");
    hex::encode(Sha256::digest(&canonical))
}

impl PromptBundle {
    pub fn new(purpose: Purpose, messages: Vec<Message>) -> Result<Self, PromptError> {
        match messages.first() {
            Some(m) if m.role != Role::Assistant => {}
            _ => return Err(PromptError::BadLayout),
        }
        let size: usize = messages.iter().map(|m| m.content.len()).sum();
        if size > MAX_PROMPT_BYTES {
            return Err(PromptError::TooLarge {
                size,
                limit: MAX_PROMPT_BYTES,
            });
        }
        let fingerprint = fingerprint(&messages);
        Ok(PromptBundle {
            messages,
            purpose,
            fingerprint,
        })
    }

    /// Recomputes the fingerprint and compares; false means the bundle was
    /// edited after construction.
    pub fn is_consistent(&self) -> bool {
        fingerprint(&self.messages) == self.fingerprint
    }

    /// Plain-text dump used for golden files.
    pub fn render(&self) -> String {
        let mut out = format!("purpose: {}\nfingerprint: {}\n", self.purpose, self.fingerprint);
        for m in &self.messages {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            out.push_str(&format!("\n=== {role} ===\n{}\n", m.content));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_stable_and_content_sensitive() {
        let a = vec![Message::new(Role::User, "hi")];
        let b = vec![Message::new(Role::User, "hi ")];
        assert_eq!(fingerprint(&a), fingerprint(&a.clone()));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
    }

    #[test]
    fn role_is_part_of_the_hash() {
        let a = vec![Message::new(Role::User, "x")];
        let b = vec![Message::new(Role::System, "x")];
        assert_ne!(fingerprint(&a), fingerprint(&b));
    }

    #[test]
    fn layout_checks() {
        assert!(matches!(
            PromptBundle::new(Purpose::CodeGen, vec![]),
            Err(PromptError::BadLayout)
        ));
        let bad = vec![Message::new(Role::Assistant, "x")];
        assert!(matches!(
            PromptBundle::new(Purpose::CodeGen, bad),
            Err(PromptError::BadLayout)
        ));
        let huge = vec![Message::new(Role::User, "x".repeat(MAX_PROMPT_BYTES + 1))];
        assert!(matches!(
            PromptBundle::new(Purpose::CodeGen, huge),
            Err(PromptError::TooLarge { .. })
        ));
    }

    #[test]
    fn bundle_serializes_with_snake_case_roles() {
        let b = PromptBundle::new(Purpose::RestateExplain, vec![Message::new(Role::System, "s")]).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.starts_with(r#"{"messages":[{"role":"system","content":"s"}],"purpose":"restate_explain""#));
        assert!(b.is_consistent());
    }
}
