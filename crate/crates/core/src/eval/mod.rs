//! Metrics over session transcripts, and aggregation of human feedback
//! annotations.

mod feedback;
mod metrics;
mod report;

pub use feedback::{feedback_stats, read_annotations, FeedbackAnnotation, FeedbackKind, FeedbackStats, KindStats};
pub use metrics::{compute_metrics, summarize_sessions, MetricRow, MetricsReport, SessionSummary};
pub use report::{render_feedback_stats, render_report, ReportFormat};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("session {session_id} refers to unknown task {task_id}")]
    UnknownTask { session_id: String, task_id: String },
    #[error("session {session_id}: {reason}")]
    MalformedLog { session_id: String, reason: String },
    #[error("annotation for session {session_id} turn {turn_index} has no matching turn")]
    DanglingAnnotation { session_id: String, turn_index: usize },
    #[error("annotation for session {session_id} turn {turn_index}: {reason}")]
    InvalidAnnotation {
        session_id: String,
        turn_index: usize,
        reason: String,
    },
    #[error("annotation line {line}: {reason}")]
    MalformedAnnotationFile { line: usize, reason: String },
}
