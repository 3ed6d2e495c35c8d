use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{FeedbackStats, MetricRow, MetricsReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// Aligned columns, percentages with one decimal, times in seconds.
    PlainTable,
    /// Comma-separated, fractions and seconds with four decimals.
    DelimitedText,
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{:.1}%", v * 100.0)).unwrap_or_else(|| "-".into())
}

fn secs(ms: Option<f64>, decimals: usize) -> String {
    ms.map(|v| format!("{:.*}", decimals, v / 1000.0))
        .unwrap_or_else(|| "-".into())
}

fn frac(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn rows(report: &MetricsReport) -> Vec<(String, &MetricRow)> {
    let mut out: Vec<_> = report
        .per_difficulty
        .iter()
        .filter(|(_, r)| r.n > 0)
        .map(|(l, r)| (l.to_string(), r))
        .collect();
    if report.overall.n > 0 {
        out.push(("overall".into(), &report.overall));
    }
    out
}

/// Deterministic text rendering. Only difficulty levels with sessions get
/// a row; an empty report renders as the header alone.
pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::PlainTable => {
            let line = |out: &mut String, cells: [&str; 6]| {
                let _ = writeln!(
                    out,
                    "{:<10} {:>5} {:>9} {:>9} {:>11} {:>10}",
                    cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]
                );
            };
            line(
                &mut out,
                ["difficulty", "n", "success", "sd", "avg_time_s", "sd_time_s"],
            );
            for (name, r) in rows(report) {
                line(
                    &mut out,
                    [
                        &name,
                        &r.n.to_string(),
                        &pct(r.success_rate),
                        &pct(r.success_sd),
                        &secs(r.avg_time_ms, 1),
                        &secs(r.time_sd_ms, 1),
                    ],
                );
            }
            if report.n_sessions > 0 {
                let _ = writeln!(
                    out,
                    "\nsessions: {}  excluded (unclear question): {}  incomplete: {}",
                    report.n_sessions, report.excluded_count, report.incomplete_count
                );
            }
        }
        ReportFormat::DelimitedText => {
            out.push_str("difficulty,n,successes,success_rate,success_sd,avg_time_s,time_sd_s\n");
            for (name, r) in rows(report) {
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{},{},{}",
                    r.n,
                    r.successes,
                    frac(r.success_rate),
                    frac(r.success_sd),
                    secs(r.avg_time_ms, 4),
                    secs(r.time_sd_ms, 4),
                );
            }
            if report.n_sessions > 0 {
                let _ = writeln!(
                    out,
                    "# sessions={} excluded={} incomplete={}",
                    report.n_sessions, report.excluded_count, report.incomplete_count
                );
            }
        }
    }
    out
}

pub fn render_feedback_stats(stats: &FeedbackStats, format: ReportFormat) -> String {
    let mut out = String::new();
    let name = |k| {
        serde_json::to_value(k)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    };
    match format {
        ReportFormat::PlainTable => {
            let _ = writeln!(
                out,
                "{:<34} {:>9} {:>9} {:>9} {:>12}",
                "feedback kind", "frequency", "accuracy", "success", "completeness"
            );
            for k in &stats.kinds {
                let _ = writeln!(
                    out,
                    "{:<34} {:>9} {:>9} {:>9} {:>12}",
                    name(k.kind),
                    pct(Some(k.frequency)),
                    pct(k.accuracy),
                    pct(k.success_given_accurate),
                    pct(k.completeness)
                );
            }
        }
        ReportFormat::DelimitedText => {
            out.push_str(
                "kind,sessions,frequency,judged,accurate,accuracy,success_given_accurate,complete,completeness\n",
            );
            for k in &stats.kinds {
                let _ = writeln!(
                    out,
                    "{},{},{:.4},{},{},{},{},{},{}",
                    name(k.kind),
                    k.sessions,
                    k.frequency,
                    k.judged,
                    k.accurate,
                    frac(k.accuracy),
                    frac(k.success_given_accurate),
                    k.complete,
                    frac(k.completeness)
                );
            }
        }
    }
    out
}
