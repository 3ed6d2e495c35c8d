//! Explain-then-refine conversational code generation.
//!
//! A session generates code for a task, runs it in a sandbox, explains it in
//! plain language and refines it from the user's feedback on that
//! explanation. The crate also carries the corpus loader, the difficulty
//! model and the metrics computed over session transcripts.

pub mod db;
pub mod eval;
pub mod gateway;
pub mod prompt;
pub mod sandbox;
pub mod session;
pub mod task;

pub use db::SqlValue;
pub use eval::{compute_metrics, render_report, MetricsReport, ReportFormat};
pub use gateway::{Gateway, GatewayMode, ModelConfig};
pub use prompt::{DemoStore, PromptBundle};
pub use sandbox::{ExecutionOutcome, Sandbox, SandboxConfig, SuccessVerdict, VerdictReason};
pub use session::{Engine, EngineSettings, Session, SessionError, SessionMode, SessionState, TerminalKind};
pub use task::{
    classify_difficulty, load_corpus, sql_edit_count, DifficultyLevel, DifficultyRating, Language, Origin, TaskBundle,
    TaskContext, TaskError, TestCase,
};
