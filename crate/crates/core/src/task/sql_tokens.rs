//! SQL lexing and the token-level edit count behind the difficulty model.
//!
//! Raw lexemes are folded into comparison units before distance is measured:
//!
//! * whitespace, comments, commas and semicolons are dropped;
//! * unquoted words are lowercased (keywords and identifiers alike);
//! * a quoted literal is one unit, re-quoted with single quotes;
//! * `a.b` qualified names are one unit;
//! * a function call `name(...)` is one unit;
//! * multi-word keywords (`group by`, `left join`, `not in`, ...) are one unit;
//! * a comparison between two single units (`t1.state = t2.state`) is one unit.
//!
//! One edit is then one insert, delete or replace of a unit.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Which side of a comparison failed to lex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Predicted,
    Gold,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Predicted => f.write_str("predicted"),
            Side::Gold => f.write_str("gold"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot lex SQL at byte {position}: {reason}")]
pub struct LexError {
    pub position: usize,
    pub reason: String,
}

impl LexError {
    pub fn on(self, which: Side) -> EditCountError {
        EditCountError::UnlexableInput {
            which,
            position: self.position,
            reason: self.reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditCountError {
    #[error("unlexable {which} input at byte {position}: {reason}")]
    UnlexableInput {
        which: Side,
        position: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme {
    Word(String),
    QuotedIdent(String),
    Literal(String),
    Number(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
}

const OPERATORS: [&str; 19] = [
    "<=", ">=", "<>", "!=", "==", "||", "<<", ">>", "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "~",
];

/// Words that may be followed by `(` without being a function call.
const NON_FUNCTION_WORDS: [&str; 18] = [
    "in",
    "exists",
    "values",
    "as",
    "on",
    "from",
    "where",
    "and",
    "or",
    "not",
    "select",
    "join",
    "using",
    "having",
    "union",
    "intersect",
    "except",
    "when",
];

const MULTI_WORD_KEYWORDS: [&[&str]; 17] = [
    &["left", "outer", "join"],
    &["right", "outer", "join"],
    &["full", "outer", "join"],
    &["group", "by"],
    &["order", "by"],
    &["left", "join"],
    &["right", "join"],
    &["inner", "join"],
    &["cross", "join"],
    &["natural", "join"],
    &["union", "all"],
    &["is", "not"],
    &["not", "in"],
    &["not", "like"],
    &["not", "between"],
    &["not", "exists"],
    &["primary", "key"],
];

const COMPARATORS: [&str; 12] = [
    "=", "==", "!=", "<>", "<", ">", "<=", ">=", "like", "not like", "glob", "is",
];

fn lex(sql: &str) -> Result<Vec<(usize, Lexeme)>, LexError> {
    let bytes = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' | 0x0c => i += 1,
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                let end = sql[i + 2..].find("*/").ok_or_else(|| LexError {
                    position: start,
                    reason: "unterminated block comment".into(),
                })?;
                i += 2 + end + 2;
            }
            b'\'' | b'"' => {
                let (text, next) = quoted(sql, i, c)?;
                out.push((start, Lexeme::Literal(text)));
                i = next;
            }
            b'`' => {
                let (text, next) = quoted(sql, i, b'`')?;
                out.push((start, Lexeme::QuotedIdent(text)));
                i = next;
            }
            b'[' => {
                let end = sql[i + 1..].find(']').ok_or_else(|| LexError {
                    position: start,
                    reason: "unterminated bracketed identifier".into(),
                })?;
                out.push((start, Lexeme::QuotedIdent(sql[i + 1..i + 1 + end].to_string())));
                i += end + 2;
            }
            b'0'..=b'9' => {
                i = scan_number(bytes, i);
                out.push((start, Lexeme::Number(sql[start..i].to_string())));
            }
            b'.' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                i = scan_number(bytes, i);
                out.push((start, Lexeme::Number(sql[start..i].to_string())));
            }
            b'(' => {
                out.push((start, Lexeme::LParen));
                i += 1;
            }
            b')' => {
                out.push((start, Lexeme::RParen));
                i += 1;
            }
            b',' => {
                out.push((start, Lexeme::Comma));
                i += 1;
            }
            b'.' => {
                out.push((start, Lexeme::Dot));
                i += 1;
            }
            b';' => {
                out.push((start, Lexeme::Semicolon));
                i += 1;
            }
            _ => {
                let ch = sql[i..].chars().next().expect("in bounds");
                if ch.is_alphabetic() || ch == '_' {
                    let mut end = i;
                    for (off, ch) in sql[i..].char_indices() {
                        if ch.is_alphanumeric() || ch == '_' || ch == '$' {
                            end = i + off + ch.len_utf8();
                        } else {
                            break;
                        }
                    }
                    out.push((start, Lexeme::Word(sql[i..end].to_lowercase())));
                    i = end;
                } else if let Some(op) = OPERATORS.iter().find(|op| sql[i..].starts_with(**op)) {
                    out.push((start, Lexeme::Op(op)));
                    i += op.len();
                } else {
                    return Err(LexError {
                        position: start,
                        reason: format!("unexpected character {ch:?}"),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn quoted(sql: &str, open: usize, quote: u8) -> Result<(String, usize), LexError> {
    let bytes = sql.as_bytes();
    let mut i = open + 1;
    let mut text = String::new();
    let mut run_start = i;
    while i < bytes.len() {
        if bytes[i] == quote {
            if bytes.get(i + 1) == Some(&quote) {
                text.push_str(&sql[run_start..=i]);
                i += 2;
                run_start = i;
                continue;
            }
            text.push_str(&sql[run_start..i]);
            return Ok((text, i + 1));
        }
        i += 1;
    }
    Err(LexError {
        position: open,
        reason: "unterminated quoted text".into(),
    })
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

#[derive(Debug, Clone, PartialEq)]
enum Unit {
    /// Self-contained operand: name, literal, number, function call, `*`.
    Atom(String),
    Word(String),
    Op(String),
    Open,
    Close,
}

impl Unit {
    fn text(&self) -> &str {
        match self {
            Unit::Atom(s) | Unit::Word(s) | Unit::Op(s) => s,
            Unit::Open => "(",
            Unit::Close => ")",
        }
    }
}

fn is_comparator(unit: &Unit) -> bool {
    match unit {
        Unit::Op(s) | Unit::Word(s) => COMPARATORS.contains(&s.as_str()) || s == "is not",
        _ => false,
    }
}

fn quote_literal(text: &str) -> String {
    format!("'{}'", text.replace('\'', "''"))
}

/// Lowers raw lexemes into comparison units. `Word` lexemes that are names
/// become atoms unless they sit in keyword position.
fn fold(lexemes: Vec<Lexeme>) -> Vec<Unit> {
    // qualified names and raw atoms
    let mut staged: Vec<Unit> = Vec::with_capacity(lexemes.len());
    let mut iter = lexemes.into_iter().peekable();
    while let Some(lexeme) = iter.next() {
        let unit = match lexeme {
            Lexeme::Word(w) => Unit::Word(w),
            Lexeme::QuotedIdent(q) => Unit::Atom(q.to_lowercase()),
            Lexeme::Literal(l) => Unit::Atom(quote_literal(&l)),
            Lexeme::Number(n) => Unit::Atom(n),
            Lexeme::Op("*") => Unit::Op("*".into()),
            Lexeme::Op(op) => Unit::Op(op.to_string()),
            Lexeme::LParen => Unit::Open,
            Lexeme::RParen => Unit::Close,
            Lexeme::Comma | Lexeme::Semicolon => continue,
            Lexeme::Dot => {
                // join onto the previous name: `t1` `.` `state`
                let prev = staged.pop();
                let next = iter.next();
                match (prev, next) {
                    (Some(Unit::Word(p) | Unit::Atom(p)), Some(Lexeme::Word(n))) => Unit::Atom(format!("{p}.{n}")),
                    (Some(Unit::Word(p) | Unit::Atom(p)), Some(Lexeme::QuotedIdent(n))) => {
                        Unit::Atom(format!("{p}.{}", n.to_lowercase()))
                    }
                    (Some(Unit::Word(p) | Unit::Atom(p)), Some(Lexeme::Op("*"))) => Unit::Atom(format!("{p}.*")),
                    (prev, next) => {
                        if let Some(prev) = prev {
                            staged.push(prev);
                        }
                        staged.push(Unit::Op(".".into()));
                        if let Some(next) = next {
                            staged.extend(fold(vec![next]));
                        }
                        continue;
                    }
                }
            }
        };
        staged.push(unit);
    }

    // function calls collapse to one atom
    let mut called: Vec<Unit> = Vec::with_capacity(staged.len());
    let mut i = 0;
    while i < staged.len() {
        if let (Unit::Word(name), Some(Unit::Open)) = (&staged[i], staged.get(i + 1)) {
            if !NON_FUNCTION_WORDS.contains(&name.as_str()) {
                if let Some(close) = matching_close(&staged, i + 1) {
                    let inner = fold_units(staged[i + 2..close].to_vec());
                    let body: Vec<&str> = inner.iter().map(Unit::text).collect();
                    called.push(Unit::Atom(format!("{name}({})", body.join(" "))));
                    i = close + 1;
                    continue;
                }
            }
        }
        called.push(staged[i].clone());
        i += 1;
    }
    fold_units(called)
}

/// Multi-word keywords, bare names and comparisons over already-lowered units.
fn fold_units(units: Vec<Unit>) -> Vec<Unit> {
    let mut merged: Vec<Unit> = Vec::with_capacity(units.len());
    let mut i = 0;
    'outer: while i < units.len() {
        for phrase in MULTI_WORD_KEYWORDS {
            let fits = phrase
                .iter()
                .enumerate()
                .all(|(k, w)| matches!(units.get(i + k), Some(Unit::Word(u)) if u == w));
            if fits {
                merged.push(Unit::Word(phrase.join(" ")));
                i += phrase.len();
                continue 'outer;
            }
        }
        merged.push(units[i].clone());
        i += 1;
    }

    // a bare word that is not a keyword is an operand
    let merged: Vec<Unit> = merged
        .into_iter()
        .map(|u| match u {
            Unit::Word(w) if !is_keyword(&w) => Unit::Atom(w),
            Unit::Op(op) if op == "*" => Unit::Atom(op),
            other => other,
        })
        .collect();

    // operands glued to arithmetic are left unfolded
    let arithmetic = |u: Option<&Unit>| matches!(u, Some(Unit::Op(op)) if !COMPARATORS.contains(&op.as_str()));
    let mut out: Vec<Unit> = Vec::with_capacity(merged.len());
    let mut i = 0;
    while i < merged.len() {
        if i + 2 < merged.len()
            && matches!(merged[i], Unit::Atom(_))
            && is_comparator(&merged[i + 1])
            && (matches!(merged[i + 2], Unit::Atom(_)) || merged[i + 2].text() == "null")
            && !arithmetic(out.last())
            && !arithmetic(merged.get(i + 3))
        {
            out.push(Unit::Atom(format!(
                "{} {} {}",
                merged[i].text(),
                merged[i + 1].text(),
                merged[i + 2].text()
            )));
            i += 3;
            continue;
        }
        out.push(merged[i].clone());
        i += 1;
    }
    out
}

fn matching_close(units: &[Unit], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (idx, unit) in units.iter().enumerate().skip(open) {
        match unit {
            Unit::Open => depth += 1,
            Unit::Close => {
                depth -= 1;
                if depth == 0 {
                    return Some(idx);
                }
            }
            _ => {}
        }
    }
    None
}

const KEYWORDS: [&str; 58] = [
    "select",
    "from",
    "where",
    "group by",
    "order by",
    "having",
    "limit",
    "offset",
    "join",
    "inner join",
    "left join",
    "right join",
    "cross join",
    "natural join",
    "left outer join",
    "right outer join",
    "full outer join",
    "on",
    "as",
    "and",
    "or",
    "not",
    "in",
    "not in",
    "is",
    "is not",
    "null",
    "like",
    "not like",
    "glob",
    "between",
    "not between",
    "exists",
    "not exists",
    "distinct",
    "all",
    "union",
    "union all",
    "intersect",
    "except",
    "case",
    "when",
    "then",
    "else",
    "end",
    "asc",
    "desc",
    "using",
    "values",
    "insert",
    "update",
    "delete",
    "set",
    "into",
    "with",
    "recursive",
    "primary key",
    "collate",
];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Lexes and folds `sql` into the normalized unit sequence.
pub fn normalize(sql: &str) -> Result<Vec<String>, LexError> {
    let lexemes = lex(sql)?.into_iter().map(|(_, l)| l).collect();
    Ok(fold(lexemes).iter().map(|u| u.text().to_string()).collect())
}

/// Classic Levenshtein distance over unit sequences, two-row formulation.
pub fn token_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(x != y);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Minimum number of unit edits turning `predicted` into `gold`.
pub fn sql_edit_count(predicted: &str, gold: &str) -> Result<usize, EditCountError> {
    let p = normalize(predicted).map_err(|e| e.on(Side::Predicted))?;
    let g = normalize(gold).map_err(|e| e.on(Side::Gold))?;
    Ok(token_distance(&p, &g))
}

/// True when the statement's outermost query carries an `ORDER BY`.
pub fn has_top_level_order_by(sql: &str) -> Result<bool, LexError> {
    let lexemes = lex(sql)?;
    let mut depth = 0i32;
    let mut prev_order = false;
    for (_, lexeme) in lexemes {
        match &lexeme {
            Lexeme::LParen => depth += 1,
            Lexeme::RParen => depth -= 1,
            Lexeme::Word(w) if depth == 0 && w == "by" && prev_order => return Ok(true),
            _ => {}
        }
        prev_order = depth == 0 && matches!(&lexeme, Lexeme::Word(w) if w == "order");
    }
    Ok(false)
}
