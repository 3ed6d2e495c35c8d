use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rusqlite::limits::Limit;

use super::{ExecStatus, ExecutionOutcome};
use crate::db::{self, SqlValue};

/// VM instructions between deadline checks.
const PROGRESS_STEP: i32 = 1000;

fn elapsed_ms(started: Instant) -> u64 {
    started.elapsed().as_millis() as u64
}

pub(super) fn run(code: &str, database_ref: &Path, limit_ms: u64, max_rows: usize) -> ExecutionOutcome {
    let started = Instant::now();
    let conn = match db::open_read_only(database_ref) {
        Ok(c) => c,
        Err(e) => return ExecutionOutcome::failed(ExecStatus::SetupError, e.to_string(), elapsed_ms(started)),
    };
    // No ATTACH: a URI filename could otherwise create a file elsewhere.
    if let Err(e) = conn.set_limit(Limit::SQLITE_LIMIT_ATTACHED, 0) {
        return ExecutionOutcome::failed(ExecStatus::SetupError, e.to_string(), elapsed_ms(started));
    }

    let deadline = started + Duration::from_millis(limit_ms);
    let fired = Arc::new(AtomicBool::new(false));
    let flag = fired.clone();
    let installed = conn.progress_handler(
        PROGRESS_STEP,
        Some(move || {
            let stop = Instant::now() >= deadline;
            if stop {
                flag.store(true, Ordering::SeqCst);
            }
            stop
        }),
    );
    if let Err(e) = installed {
        return ExecutionOutcome::failed(ExecStatus::SetupError, e.to_string(), elapsed_ms(started));
    }

    let result = (|| -> rusqlite::Result<(Vec<String>, Vec<Vec<SqlValue>>, bool)> {
        let mut stmt = conn.prepare(code)?;
        let columns: Vec<String> = stmt.column_names().into_iter().map(String::from).collect();
        let width = columns.len();
        let mut rows = stmt.query([])?;
        let mut out = Vec::new();
        while let Some(row) = rows.next()? {
            if out.len() == max_rows {
                return Ok((columns, out, true));
            }
            out.push(
                (0..width)
                    .map(|i| row.get_ref(i).map(SqlValue::from_ref))
                    .collect::<rusqlite::Result<Vec<_>>>()?,
            );
        }
        Ok((columns, out, false))
    })();

    let wall_ms = elapsed_ms(started);
    match result {
        Ok((_, _, true)) => ExecutionOutcome::failed(
            ExecStatus::RuntimeError,
            format!("result has more than {max_rows} rows"),
            wall_ms,
        ),
        Ok((columns, sql_rows, false)) => ExecutionOutcome {
            status: ExecStatus::Ok,
            columns,
            sql_rows,
            case_results: Vec::new(),
            stderr_excerpt: String::new(),
            wall_ms,
        },
        Err(_) if fired.load(Ordering::SeqCst) => ExecutionOutcome::failed(
            ExecStatus::Timeout,
            format!("query exceeded {limit_ms} ms"),
            wall_ms.max(limit_ms),
        ),
        Err(e) => ExecutionOutcome::failed(ExecStatus::RuntimeError, e.to_string(), wall_ms),
    }
}
