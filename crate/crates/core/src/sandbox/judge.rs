use std::cmp::Ordering;

use super::python::TIMEOUT_DETAIL;
use super::{ExecStatus, ExecutionOutcome, SuccessVerdict, VerdictReason};
use crate::db::SqlValue;
use crate::task::sql_tokens::has_top_level_order_by;

pub const NUMERIC_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Cell equality: numbers within relative tolerance, everything else exact.
pub fn values_match(a: &SqlValue, b: &SqlValue) -> bool {
    match (a, b) {
        (SqlValue::Integer(x), SqlValue::Integer(y)) => x == y,
        (SqlValue::Null, SqlValue::Null) => true,
        (SqlValue::Text(x), SqlValue::Text(y)) => x == y,
        (SqlValue::Blob { hex: x }, SqlValue::Blob { hex: y }) => x == y,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => {
                if x == y {
                    return true;
                }
                let scale = x.abs().max(y.abs());
                (x - y).abs() <= NUMERIC_RELATIVE_TOLERANCE * scale
            }
            _ => false,
        },
    }
}

fn rank(v: &SqlValue) -> u8 {
    match v {
        SqlValue::Null => 0,
        SqlValue::Integer(_) | SqlValue::Real(_) => 1,
        SqlValue::Text(_) => 2,
        SqlValue::Blob { .. } => 3,
    }
}

/// Total order used to canonicalise unordered result sets.
fn cmp_value(a: &SqlValue, b: &SqlValue) -> Ordering {
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (SqlValue::Integer(x), SqlValue::Integer(y)) => x.cmp(y),
        (SqlValue::Text(x), SqlValue::Text(y)) => x.cmp(y),
        (SqlValue::Blob { hex: x }, SqlValue::Blob { hex: y }) => x.cmp(y),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x
                .total_cmp(&y)
                .then_with(|| matches!(a, SqlValue::Real(_)).cmp(&matches!(b, SqlValue::Real(_)))),
            _ => Ordering::Equal,
        },
    })
}

fn cmp_row(a: &[SqlValue], b: &[SqlValue]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = cmp_value(x, y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn rows_match(a: &[Vec<SqlValue>], b: &[Vec<SqlValue>]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| values_match(p, q)))
}

/// Compares result sets as sequences when `ordered`, otherwise as multisets.
pub fn compare_rows(pred: &[Vec<SqlValue>], gold: &[Vec<SqlValue>], ordered: bool) -> bool {
    if pred.len() != gold.len() {
        return false;
    }
    if ordered {
        return rows_match(pred, gold);
    }
    let mut p = pred.to_vec();
    let mut g = gold.to_vec();
    p.sort_by(|a, b| cmp_row(a, b));
    g.sort_by(|a, b| cmp_row(a, b));
    rows_match(&p, &g)
}

/// Execution accuracy. Row order matters only when the gold query has a
/// top-level ORDER BY.
pub fn judge_sql(pred: &ExecutionOutcome, gold: &ExecutionOutcome, gold_code: &str) -> SuccessVerdict {
    let reason = match (pred.status, gold.status) {
        (_, s) if s != ExecStatus::Ok => VerdictReason::ExecutionFailed,
        (ExecStatus::Timeout, _) => VerdictReason::TimedOut,
        (s, _) if s != ExecStatus::Ok => VerdictReason::ExecutionFailed,
        _ => {
            let ordered = has_top_level_order_by(gold_code).unwrap_or(false);
            if compare_rows(&pred.sql_rows, &gold.sql_rows, ordered) {
                VerdictReason::ResultsMatch
            } else {
                VerdictReason::ResultsDiffer
            }
        }
    };
    SuccessVerdict::from_reason(reason)
}

pub fn judge_python(outcome: &ExecutionOutcome) -> SuccessVerdict {
    let reason = if outcome.status == ExecStatus::SetupError || outcome.case_results.is_empty() {
        VerdictReason::ExecutionFailed
    } else {
        let failed: Vec<_> = outcome.case_results.iter().filter(|c| !c.passed).collect();
        if failed.is_empty() {
            VerdictReason::AllCasesPassed
        } else if failed.iter().all(|c| c.detail == TIMEOUT_DETAIL) {
            VerdictReason::TimedOut
        } else {
            VerdictReason::CaseFailed
        }
    };
    SuccessVerdict::from_reason(reason)
}
