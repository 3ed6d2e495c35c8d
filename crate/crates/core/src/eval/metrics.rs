use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::session::{EventBody, SessionEvent, SessionMode, TerminalKind, TerminalOutcome};
use crate::task::{DifficultyLevel, TaskBundle};

/// One session folded out of its transcript events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub task_id: String,
    pub mode: SessionMode,
    pub turn_indices: BTreeSet<usize>,
    pub outcome: Option<TerminalOutcome>,
}

/// Groups events by session. Events may be interleaved across sessions;
/// the result is ordered by session id.
pub fn summarize_sessions(events: &[SessionEvent]) -> Result<Vec<SessionSummary>, EvalError> {
    let mut by_id: BTreeMap<&str, Option<SessionSummary>> = BTreeMap::new();
    let malformed = |id: &str, reason: &str| EvalError::MalformedLog {
        session_id: id.to_string(),
        reason: reason.to_string(),
    };
    // Turns and outcomes may only follow creation, so process creations first.
    for e in events {
        if let EventBody::SessionCreated { task_id, mode, .. } = &e.body {
            let slot = by_id.entry(&e.session_id).or_default();
            if slot.is_some() {
                return Err(malformed(&e.session_id, "created more than once"));
            }
            *slot = Some(SessionSummary {
                session_id: e.session_id.clone(),
                task_id: task_id.clone(),
                mode: *mode,
                turn_indices: BTreeSet::new(),
                outcome: None,
            });
        }
    }
    for e in events {
        let Some(Some(summary)) = by_id.get_mut(e.session_id.as_str()) else {
            return Err(malformed(&e.session_id, "events without a session_created record"));
        };
        match &e.body {
            EventBody::TurnAdded { turn } => {
                if !summary.turn_indices.insert(turn.index) {
                    return Err(malformed(&e.session_id, "turn recorded twice"));
                }
            }
            EventBody::Terminal { outcome } => {
                let previous = summary.outcome.replace(*outcome);
                if previous.is_some() {
                    return Err(malformed(&e.session_id, "more than one terminal record"));
                }
            }
            _ => {}
        }
    }
    Ok(by_id.into_values().flatten().collect())
}

/// Success rate and time for one slice of sessions. Rates and times are
/// `None` when the slice is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub n: usize,
    pub successes: usize,
    pub success_rate: Option<f64>,
    /// Population SD of the per-session success indicator.
    pub success_sd: Option<f64>,
    pub avg_time_ms: Option<f64>,
    pub time_sd_ms: Option<f64>,
}

fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

impl MetricRow {
    fn from_outcomes(outcomes: &[&TerminalOutcome]) -> Self {
        let wins: Vec<f64> = outcomes
            .iter()
            .map(|o| f64::from(u8::from(o.final_verdict.success)))
            .collect();
        let times: Vec<f64> = outcomes.iter().map(|o| o.elapsed_ms as f64).collect();
        let rate = mean_sd(&wins);
        let time = mean_sd(&times);
        MetricRow {
            n: outcomes.len(),
            successes: outcomes.iter().filter(|o| o.final_verdict.success).count(),
            success_rate: rate.map(|r| r.0),
            success_sd: rate.map(|r| r.1),
            avg_time_ms: time.map(|t| t.0),
            time_sd_ms: time.map(|t| t.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Every session in the logs, counted or not.
    pub n_sessions: usize,
    /// Sessions skipped as unclear; left out of every metric.
    pub excluded_count: usize,
    /// Sessions with no terminal record; left out of every metric.
    pub incomplete_count: usize,
    pub overall: MetricRow,
    pub per_difficulty: BTreeMap<DifficultyLevel, MetricRow>,
}

/// Micro-averaged over sessions. Unclear-question skips are excluded;
/// unsolvable skips and timeouts count as failures with their elapsed time.
pub fn compute_metrics(events: &[SessionEvent], corpus: &[TaskBundle]) -> Result<MetricsReport, EvalError> {
    let tasks: HashMap<&str, &TaskBundle> = corpus.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let sessions = summarize_sessions(events)?;
    let mut counted = Vec::new();
    let mut per_level: BTreeMap<DifficultyLevel, Vec<&TerminalOutcome>> = BTreeMap::new();
    let (mut excluded, mut incomplete) = (0, 0);
    for s in &sessions {
        let Some(task) = tasks.get(s.task_id.as_str()) else {
            return Err(EvalError::UnknownTask {
                session_id: s.session_id.clone(),
                task_id: s.task_id.clone(),
            });
        };
        let Some(outcome) = &s.outcome else {
            incomplete += 1;
            continue;
        };
        if outcome.kind == TerminalKind::SkipUnclear {
            excluded += 1;
            continue;
        }
        counted.push(outcome);
        if let Some(d) = &task.difficulty {
            per_level.entry(d.level).or_default().push(outcome);
        }
    }
    Ok(MetricsReport {
        n_sessions: sessions.len(),
        excluded_count: excluded,
        incomplete_count: incomplete,
        overall: MetricRow::from_outcomes(&counted),
        per_difficulty: DifficultyLevel::ALL
            .into_iter()
            .map(|l| {
                (
                    l,
                    MetricRow::from_outcomes(per_level.get(&l).map(Vec::as_slice).unwrap_or(&[])),
                )
            })
            .collect(),
    })
}
