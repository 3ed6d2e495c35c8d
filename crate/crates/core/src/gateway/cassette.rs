//! Append-only JSONL store of model completions keyed by prompt fingerprint.
//!
//! One `CompletionRecord` per line. When a fingerprint appears more than
//! once the last line wins, which is how overwrites are expressed without
//! rewriting the file.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::prompt::PromptBundle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub fingerprint: String,
    pub request: PromptBundle,
    pub response_text: String,
    pub latency_ms: u64,
    /// RFC 3339, UTC.
    pub recorded_at: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CassetteError {
    #[error("cassette {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cassette {path} line {line}: {reason}")]
    Malformed { path: PathBuf, line: usize, reason: String },
}

type Index = HashMap<String, CompletionRecord>;

#[derive(Debug)]
pub struct Cassette {
    path: PathBuf,
    snapshot: RwLock<Arc<Index>>,
    writer: Mutex<()>,
}

/// Every record in file order, checking that each fingerprint matches its
/// request.
pub fn read_records(path: &Path) -> Result<Vec<CompletionRecord>, CassetteError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(CassetteError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CassetteError::Malformed {
            path: path.to_path_buf(),
            line: k + 1,
            reason,
        };
        let record: CompletionRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if record.fingerprint != record.request.fingerprint || !record.request.is_consistent() {
            return Err(malformed("fingerprint does not match the request".into()));
        }
        out.push(record);
    }
    Ok(out)
}

impl Cassette {
    /// Opens (or prepares to create) the cassette at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<Cassette, CassetteError> {
        let path = path.into();
        let index: Index = read_records(&path)?
            .into_iter()
            .map(|r| (r.fingerprint.clone(), r))
            .collect();
        Ok(Cassette {
            path,
            snapshot: RwLock::new(Arc::new(index)),
            writer: Mutex::new(()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn snapshot(&self) -> Arc<Index> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn get(&self, fingerprint: &str) -> Option<CompletionRecord> {
        self.snapshot().get(fingerprint).cloned()
    }

    pub fn contains(&self, fingerprint: &str) -> bool {
        self.snapshot().contains_key(fingerprint)
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends one line and publishes a new snapshot. Writers are serialized;
    /// readers keep whatever snapshot they already hold.
    pub fn append(&self, record: CompletionRecord) -> Result<(), CassetteError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let io = |source| CassetteError::Io {
            path: self.path.clone(),
            source,
        };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut line = serde_json::to_string(&record).expect("records always serialize");
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io)?;
        file.write_all(line.as_bytes()).map_err(io)?;
        file.flush().map_err(io)?;

        let mut next = (*self.snapshot()).clone();
        next.insert(record.fingerprint.clone(), record);
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{Message, Purpose, Role};

    fn record(text: &str, reply: &str) -> CompletionRecord {
        let request = PromptBundle::new(Purpose::CodeGen, vec![Message::new(Role::User, text)]).unwrap();
        CompletionRecord {
            fingerprint: request.fingerprint.clone(),
            request,
            response_text: reply.into(),
            latency_ms: 12,
            recorded_at: "2024-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn last_record_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let c = Cassette::open(&path).unwrap();
        assert!(c.is_empty());
        c.append(record("q", "first")).unwrap();
        c.append(record("q", "second")).unwrap();
        let fp = record("q", "").fingerprint;
        assert_eq!(c.get(&fp).unwrap().response_text, "second");
        let reopened = Cassette::open(&path).unwrap();
        assert_eq!(reopened.get(&fp).unwrap().response_text, "second");
        assert_eq!(read_records(&path).unwrap().len(), 2);
    }

    #[test]
    fn tampered_fingerprint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut r = record("q", "a");
        r.request.messages[0].content = "changed".into();
        fs::write(&path, serde_json::to_string(&r).unwrap() + "\n").unwrap();
        assert!(matches!(
            Cassette::open(&path),
            Err(CassetteError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn snapshot_held_by_a_reader_is_unaffected_by_writes() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cassette::open(dir.path().join("c.jsonl")).unwrap();
        let before = c.snapshot();
        c.append(record("q", "a")).unwrap();
        assert!(before.is_empty());
        assert_eq!(c.len(), 1);
    }
}
