//! Coding tasks: corpus loading, validation and the difficulty model.

mod difficulty;
mod loader;
pub mod sql_tokens;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::db::SqlValue;

pub use difficulty::{classify_difficulty, python_changed_lines, DifficultyError};
pub use loader::{load_corpus, load_corpus_auto, read_manifest_origin};
pub use sql_tokens::{sql_edit_count, EditCountError, Side};

/// Sample rows shown per table in the task context.
pub const SAMPLE_ROWS_PER_TABLE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    Sql,
    Python,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Language::Sql => f.write_str("sql"),
            Language::Python => f.write_str("python"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    SpiderStyle,
    MbppStyle,
    Custom,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::SpiderStyle => f.write_str("spider_style"),
            Origin::MbppStyle => f.write_str("mbpp_style"),
            Origin::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyLevel {
    Easy,
    Medium,
    Hard,
}

impl DifficultyLevel {
    pub const ALL: [DifficultyLevel; 3] = [DifficultyLevel::Easy, DifficultyLevel::Medium, DifficultyLevel::Hard];

    /// Shared Easy/Medium/Hard cut points: at most 2, 3 to 5, more than 5.
    pub fn from_count(count: usize) -> Self {
        match count {
            0..=2 => DifficultyLevel::Easy,
            3..=5 => DifficultyLevel::Medium,
            _ => DifficultyLevel::Hard,
        }
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DifficultyLevel::Easy => f.write_str("easy"),
            DifficultyLevel::Medium => f.write_str("medium"),
            DifficultyLevel::Hard => f.write_str("hard"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyRating {
    pub level: DifficultyLevel,
    /// Unit edits from prediction to gold (SQL only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit_count: Option<u32>,
    /// Changed logical lines from prediction to gold (Python only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub changed_lines: Option<u32>,
    pub rationale: String,
}

/// One assert plus a human-readable statement of what it expects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub assertion: String,
    pub expected: String,
}

impl TestCase {
    pub fn from_assertion(assertion: impl Into<String>) -> Self {
        let assertion = assertion.into();
        let expected = describe_assertion(&assertion);
        TestCase { assertion, expected }
    }
}

/// `assert f(x) == y` reads as `f(x) returns y`; anything else is quoted back.
fn describe_assertion(assertion: &str) -> String {
    let body = assertion
        .trim()
        .strip_prefix("assert")
        .map(str::trim)
        .unwrap_or(assertion.trim());
    match split_top_level_eq(body) {
        Some((lhs, rhs)) => format!("{} returns {}", lhs.trim(), rhs.trim()),
        None => format!("{body} holds"),
    }
}

fn split_top_level_eq(body: &str) -> Option<(&str, &str)> {
    let bytes = body.as_bytes();
    let mut depth = 0i32;
    let mut quote: Option<u8> = None;
    let mut i = 0;
    while i + 1 < bytes.len() {
        let c = bytes[i];
        match quote {
            Some(_) if c == b'\\' => {
                i += 2;
                continue;
            }
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                b'\'' | b'"' => quote = Some(c),
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' | b'}' => depth -= 1,
                b'=' if depth == 0 && bytes[i + 1] == b'=' => return Some((&body[..i], &body[i + 2..])),
                _ => {}
            },
        }
        i += 1;
    }
    None
}

/// Rows sampled from one table for display and prompting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSample {
    pub table: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SqlValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskContext {
    Sql {
        database_ref: PathBuf,
        schema_text: String,
        sample_rows: Vec<TableSample>,
    },
    Python {
        test_cases: Vec<TestCase>,
    },
}

impl TaskContext {
    /// Plain-text rendering of the sampled rows, one block per table.
    pub fn render_samples(&self) -> String {
        let TaskContext::Sql { sample_rows, .. } = self else {
            return String::new();
        };
        let mut out = String::new();
        for (k, sample) in sample_rows.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            out.push_str(&sample.table);
            out.push_str(":\n");
            out.push_str(&sample.columns.join(" | "));
            out.push('\n');
            for row in &sample.rows {
                let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                out.push_str(&cells.join(" | "));
                out.push('\n');
            }
        }
        out
    }

    pub fn test_assertions(&self) -> Vec<String> {
        match self {
            TaskContext::Python { test_cases } => test_cases.iter().map(|c| c.assertion.clone()).collect(),
            TaskContext::Sql { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBundle {
    pub task_id: String,
    pub language: Language,
    pub question: String,
    pub context: TaskContext,
    pub gold_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<DifficultyRating>,
    pub origin: Origin,
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("no corpus manifest at {0}")]
    MissingManifest(PathBuf),
    #[error("manifest {path} is not readable: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },
    #[error("manifest declares origin {found} but {declared} was requested")]
    OriginMismatch { declared: Origin, found: Origin },
    #[error("task {task_id}: {reason}")]
    MalformedTask { task_id: String, reason: String },
    #[error("task {task_id}: database {path} does not exist")]
    DanglingDatabaseRef { task_id: String, path: PathBuf },
}

impl TaskBundle {
    /// Checks the bundle-level invariants. Database existence is checked
    /// here as well, since a bundle whose database vanished cannot run.
    pub fn validate(&self) -> Result<(), TaskError> {
        let malformed = |reason: &str| TaskError::MalformedTask {
            task_id: self.task_id.clone(),
            reason: reason.to_string(),
        };
        if self.task_id.trim().is_empty() {
            return Err(malformed("task_id is empty"));
        }
        if self.question.trim().is_empty() {
            return Err(malformed("question is empty"));
        }
        if self.gold_code.trim().is_empty() {
            return Err(malformed("gold_code is empty"));
        }
        match (&self.language, &self.context) {
            (
                Language::Sql,
                TaskContext::Sql {
                    database_ref,
                    sample_rows,
                    ..
                },
            ) => {
                if !database_ref.is_file() {
                    return Err(TaskError::DanglingDatabaseRef {
                        task_id: self.task_id.clone(),
                        path: database_ref.clone(),
                    });
                }
                if sample_rows.iter().any(|s| s.rows.len() > SAMPLE_ROWS_PER_TABLE) {
                    return Err(malformed("more than 3 sample rows for a table"));
                }
            }
            (Language::Python, TaskContext::Python { test_cases }) => {
                if test_cases.is_empty() {
                    return Err(malformed("python task has no test cases"));
                }
            }
            (Language::Sql, _) => return Err(malformed("sql task needs a database context")),
            (Language::Python, _) => return Err(malformed("python task needs test cases")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_boundaries() {
        let levels: Vec<_> = [0, 1, 2, 3, 5, 6, 40]
            .into_iter()
            .map(DifficultyLevel::from_count)
            .collect();
        use DifficultyLevel::*;
        assert_eq!(levels, [Easy, Easy, Easy, Medium, Medium, Hard, Hard]);
    }

    #[test]
    fn describes_equality_asserts() {
        let case = TestCase::from_assertion("assert round_num(4722, 10) == 4720");
        assert_eq!(case.expected, "round_num(4722, 10) returns 4720");
        let case = TestCase::from_assertion(r#"assert remove_Occ("a==b", "=") == "ab""#);
        assert_eq!(case.expected, r#"remove_Occ("a==b", "=") returns "ab""#);
        let case = TestCase::from_assertion("assert is_ok(3)");
        assert_eq!(case.expected, "is_ok(3) holds");
    }

    fn python_task() -> TaskBundle {
        TaskBundle {
            task_id: "t".into(),
            language: Language::Python,
            question: "q".into(),
            context: TaskContext::Python {
                test_cases: vec![TestCase::from_assertion("assert f() == 1")],
            },
            gold_code: "def f():\n    return 1\n".into(),
            difficulty: None,
            origin: Origin::Custom,
        }
    }

    #[test]
    fn validation_rejects_blank_fields() {
        assert!(python_task().validate().is_ok());
        let mut t = python_task();
        t.question = "  ".into();
        assert!(matches!(t.validate(), Err(TaskError::MalformedTask { .. })));
        let mut t = python_task();
        t.gold_code.clear();
        assert!(matches!(t.validate(), Err(TaskError::MalformedTask { .. })));
        let mut t = python_task();
        t.context = TaskContext::Python { test_cases: vec![] };
        assert!(matches!(t.validate(), Err(TaskError::MalformedTask { .. })));
    }

    #[test]
    fn validation_rejects_language_context_mismatch() {
        let mut t = python_task();
        t.language = Language::Sql;
        assert!(matches!(t.validate(), Err(TaskError::MalformedTask { .. })));
    }
}
