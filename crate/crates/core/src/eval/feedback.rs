use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{EvalError, SessionSummary};
use crate::session::TerminalKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    InstructionForErrorCorrection,
    QuestionRephrasing,
    InputOutputSamples,
    SelfDebug,
    StepByStepInstructions,
}

/// A human judgment about one piece of feedback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackAnnotation {
    pub session_id: String,
    pub turn_index: usize,
    pub kind: FeedbackKind,
    #[serde(default)]
    pub accurate: Option<bool>,
    /// Whether the feedback addressed every error. Only meaningful for
    /// accurate feedback.
    #[serde(default)]
    pub complete: Option<bool>,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub kind: FeedbackKind,
    /// Sessions with at least one annotation of this kind.
    pub sessions: usize,
    /// `sessions` over all annotated sessions.
    pub frequency: f64,
    /// Annotations of this kind with an accuracy judgment.
    pub judged: usize,
    pub accurate: usize,
    pub accuracy: Option<f64>,
    /// Of the sessions where this kind was accurate at least once (and the
    /// session counts towards metrics), the share that ended successfully.
    pub success_given_accurate: Option<f64>,
    pub complete: usize,
    /// Complete over accurate.
    pub completeness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackStats {
    pub annotated_sessions: usize,
    pub kinds: Vec<KindStats>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Reads a JSONL annotation file. Blank lines are skipped.
pub fn read_annotations<R: BufRead>(input: R) -> Result<Vec<FeedbackAnnotation>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let bad = |reason: String| EvalError::MalformedAnnotationFile { line: i + 1, reason };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?);
    }
    Ok(out)
}

pub fn feedback_stats(
    annotations: &[FeedbackAnnotation],
    sessions: &[SessionSummary],
) -> Result<FeedbackStats, EvalError> {
    let by_id: HashMap<&str, &SessionSummary> = sessions.iter().map(|s| (s.session_id.as_str(), s)).collect();

    #[derive(Default)]
    struct Acc<'a> {
        sessions: BTreeSet<&'a str>,
        accurate_sessions: BTreeSet<&'a str>,
        judged: usize,
        accurate: usize,
        complete: usize,
    }
    let mut per_kind: BTreeMap<FeedbackKind, Acc> = BTreeMap::new();
    let mut annotated = BTreeSet::new();

    for a in annotations {
        let known = by_id
            .get(a.session_id.as_str())
            .is_some_and(|s| s.turn_indices.contains(&a.turn_index));
        if !known {
            return Err(EvalError::DanglingAnnotation {
                session_id: a.session_id.clone(),
                turn_index: a.turn_index,
            });
        }
        if a.complete.is_some() && a.accurate != Some(true) {
            return Err(EvalError::InvalidAnnotation {
                session_id: a.session_id.clone(),
                turn_index: a.turn_index,
                reason: "completeness is only judged for accurate feedback".into(),
            });
        }
        annotated.insert(a.session_id.as_str());
        let acc = per_kind.entry(a.kind).or_default();
        acc.sessions.insert(&a.session_id);
        if let Some(accurate) = a.accurate {
            acc.judged += 1;
            if accurate {
                acc.accurate += 1;
                acc.accurate_sessions.insert(&a.session_id);
            }
        }
        if a.complete == Some(true) {
            acc.complete += 1;
        }
    }

    let kinds = per_kind
        .into_iter()
        .map(|(kind, acc)| {
            let finished: Vec<bool> = acc
                .accurate_sessions
                .iter()
                .filter_map(|id| by_id[id].outcome)
                .filter(|o| o.kind != TerminalKind::SkipUnclear)
                .map(|o| o.final_verdict.success)
                .collect();
            KindStats {
                kind,
                sessions: acc.sessions.len(),
                frequency: acc.sessions.len() as f64 / annotated.len() as f64,
                judged: acc.judged,
                accurate: acc.accurate,
                accuracy: ratio(acc.accurate, acc.judged),
                success_given_accurate: ratio(finished.iter().filter(|s| **s).count(), finished.len()),
                complete: acc.complete,
                completeness: ratio(acc.complete, acc.accurate),
            }
        })
        .collect();
    Ok(FeedbackStats {
        annotated_sessions: annotated.len(),
        kinds,
    })
}
