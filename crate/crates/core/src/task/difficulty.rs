use similar::{capture_diff_slices, Algorithm, DiffTag};

use super::sql_tokens::{normalize, token_distance, EditCountError, Side};
use super::{DifficultyLevel, DifficultyRating, Language, TaskBundle};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DifficultyError {
    #[error(transparent)]
    Unlexable(#[from] EditCountError),
}

/// Rates how far `predicted` is from the task's gold solution.
///
/// SQL uses the unit edit count. Python uses changed logical lines, escalated
/// to Hard when the fix adds two or more levels of loop nesting or when
/// recursion appears on only one side.
pub fn classify_difficulty(task: &TaskBundle, predicted: &str) -> Result<DifficultyRating, DifficultyError> {
    match task.language {
        Language::Sql => classify_sql(predicted, &task.gold_code),
        Language::Python => Ok(classify_python(predicted, &task.gold_code)),
    }
}

fn classify_sql(predicted: &str, gold: &str) -> Result<DifficultyRating, DifficultyError> {
    let p = normalize(predicted).map_err(|e| e.on(Side::Predicted))?;
    let g = normalize(gold).map_err(|e| e.on(Side::Gold))?;
    let edits = token_distance(&p, &g);
    let level = DifficultyLevel::from_count(edits);
    Ok(DifficultyRating {
        level,
        edit_count: Some(edits as u32),
        changed_lines: None,
        rationale: format!(
            "{edits} unit edit(s) between predicted ({} units) and gold ({} units)",
            p.len(),
            g.len()
        ),
    })
}

fn logical_lines(code: &str) -> Vec<&str> {
    code.lines()
        .map(str::trim_end)
        .filter(|l| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        })
        .collect()
}

/// Changed logical lines: per differing region, the larger of lines removed
/// and lines added.
pub fn python_changed_lines(predicted: &str, gold: &str) -> usize {
    let old = logical_lines(predicted);
    let new = logical_lines(gold);
    let mut changed = 0;
    let mut removed = 0;
    let mut added = 0;
    for op in capture_diff_slices(Algorithm::Myers, &old, &new) {
        let (tag, old_range, new_range) = op.as_tag_tuple();
        if tag == DiffTag::Equal {
            changed += removed.max(added);
            removed = 0;
            added = 0;
        } else {
            removed += old_range.len();
            added += new_range.len();
        }
    }
    changed + removed.max(added)
}

fn indent_of(line: &str) -> usize {
    line.chars()
        .take_while(|c| c.is_whitespace())
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum()
}

fn max_loop_depth(code: &str) -> usize {
    let mut stack: Vec<(usize, bool)> = Vec::new();
    let mut deepest = 0;
    for line in logical_lines(code) {
        let indent = indent_of(line);
        while stack.last().is_some_and(|(i, _)| *i >= indent) {
            stack.pop();
        }
        let body = line.trim_start();
        let is_loop = ["for ", "while ", "async for "].iter().any(|k| body.starts_with(k));
        if is_loop {
            let depth = stack.iter().filter(|(_, l)| *l).count() + 1;
            deepest = deepest.max(depth);
        }
        if body.ends_with(':') {
            stack.push((indent, is_loop));
        }
    }
    deepest
}

fn has_recursion(code: &str) -> bool {
    let lines = logical_lines(code);
    for (k, line) in lines.iter().enumerate() {
        let body = line.trim_start();
        let Some(rest) = body.strip_prefix("def ") else {
            continue;
        };
        let Some(name) = rest.split('(').next().map(str::trim) else {
            continue;
        };
        let indent = indent_of(line);
        let call = format!("{name}(");
        let recursive = lines[k + 1..].iter().take_while(|l| indent_of(l) > indent).any(|l| {
            l.match_indices(&call)
                .any(|(pos, _)| pos == 0 || !l[..pos].ends_with(|c: char| c.is_alphanumeric() || c == '_' || c == '.'))
        });
        if recursive {
            return true;
        }
    }
    false
}

fn classify_python(predicted: &str, gold: &str) -> DifficultyRating {
    let changed = python_changed_lines(predicted, gold);
    let pred_depth = max_loop_depth(predicted);
    let gold_depth = max_loop_depth(gold);
    let pred_rec = has_recursion(predicted);
    let gold_rec = has_recursion(gold);

    let mut level = DifficultyLevel::from_count(changed);
    let mut markers = Vec::new();
    if gold_depth >= pred_depth + 2 {
        markers.push(format!("loop nesting grows {pred_depth} -> {gold_depth}"));
    }
    if pred_rec != gold_rec {
        markers.push(
            if gold_rec {
                "recursion introduced"
            } else {
                "recursion removed"
            }
            .to_string(),
        );
    }
    if !markers.is_empty() {
        level = DifficultyLevel::Hard;
    }
    let mut rationale = format!("{changed} changed logical line(s)");
    if !markers.is_empty() {
        rationale.push_str("; rewrite marker: ");
        rationale.push_str(&markers.join(", "));
    }
    DifficultyRating {
        level,
        edit_count: None,
        changed_lines: Some(changed as u32),
        rationale,
    }
}
