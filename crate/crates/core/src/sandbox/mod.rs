//! Sandboxed execution of generated code and the success verdict.
//!
//! SQL runs in-process on a read-only, immutable connection with a progress
//! handler enforcing the time limit. Python runs one fresh interpreter per
//! test case inside a throwaway scratch directory, with an audit hook that
//! refuses network access, subprocesses and writes outside the scratch dir.

mod judge;
mod python;
mod sql;

use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

use crate::db::SqlValue;

pub use judge::{compare_rows, judge_python, judge_sql, values_match, NUMERIC_RELATIVE_TOLERANCE};

pub const DEFAULT_SQL_LIMIT_MS: u64 = 10_000;
pub const DEFAULT_CASE_LIMIT_MS: u64 = 10_000;
pub const DEFAULT_MAX_CONCURRENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    RuntimeError,
    Timeout,
    SetupError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub index: usize,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: ExecStatus,
    /// Column names of the result set (SQL only).
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub sql_rows: Vec<Vec<SqlValue>>,
    #[serde(default)]
    pub case_results: Vec<CaseResult>,
    #[serde(default)]
    pub stderr_excerpt: String,
    pub wall_ms: u64,
}

impl ExecutionOutcome {
    pub(crate) fn failed(status: ExecStatus, message: impl Into<String>, wall_ms: u64) -> Self {
        ExecutionOutcome {
            status,
            columns: Vec::new(),
            sql_rows: Vec::new(),
            case_results: Vec::new(),
            stderr_excerpt: excerpt(&message.into()),
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    ResultsMatch,
    ResultsDiffer,
    ExecutionFailed,
    AllCasesPassed,
    CaseFailed,
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuccessVerdict {
    pub success: bool,
    pub reason: VerdictReason,
}

impl SuccessVerdict {
    pub fn from_reason(reason: VerdictReason) -> Self {
        SuccessVerdict {
            success: matches!(reason, VerdictReason::ResultsMatch | VerdictReason::AllCasesPassed),
            reason,
        }
    }
}

const EXCERPT_CHARS: usize = 2000;

pub(crate) fn excerpt(text: &str) -> String {
    let text = text.trim();
    match text.char_indices().nth(EXCERPT_CHARS) {
        Some((cut, _)) => format!("{}...", &text[..cut]),
        None => text.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxConfig {
    pub python: PathBuf,
    pub sql_limit_ms: u64,
    pub case_limit_ms: u64,
    pub max_concurrent: usize,
    /// Result sets longer than this are reported as a runtime error.
    pub max_rows: usize,
    /// Address-space cap for Python cases, in bytes.
    pub python_memory_bytes: u64,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            python: PathBuf::from("python3"),
            sql_limit_ms: DEFAULT_SQL_LIMIT_MS,
            case_limit_ms: DEFAULT_CASE_LIMIT_MS,
            max_concurrent: DEFAULT_MAX_CONCURRENT,
            max_rows: 100_000,
            python_memory_bytes: 1 << 30,
        }
    }
}

#[derive(Debug)]
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Shared executor; clones share the concurrency cap.
#[derive(Debug, Clone)]
pub struct Sandbox {
    config: Arc<SandboxConfig>,
    permits: Arc<Semaphore>,
}

impl Default for Sandbox {
    fn default() -> Self {
        Sandbox::new(SandboxConfig::default())
    }
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Self {
        let permits = Arc::new(Semaphore::new(config.max_concurrent));
        Sandbox {
            config: Arc::new(config),
            permits,
        }
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// Runs `code` against the database at `database_ref`, read-only.
    pub fn run_sql(&self, code: &str, database_ref: &std::path::Path, limit_ms: u64) -> ExecutionOutcome {
        let _permit = self.permits.acquire();
        sql::run(code, database_ref, limit_ms, self.config.max_rows)
    }

    /// Runs each assertion in its own interpreter with `code` loaded first.
    pub fn run_python(&self, code: &str, cases: &[String], per_case_limit_ms: u64) -> ExecutionOutcome {
        let _permit = self.permits.acquire();
        python::run(&self.config, code, cases, per_case_limit_ms)
    }
}
