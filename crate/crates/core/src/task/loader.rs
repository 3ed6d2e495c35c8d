use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{
    classify_difficulty, DifficultyLevel, DifficultyRating, Language, Origin, TableSample, TaskBundle, TaskContext,
    TaskError, TestCase, SAMPLE_ROWS_PER_TABLE,
};
use crate::db;

const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    origin: Origin,
    #[serde(default)]
    tasks: Vec<ManifestTask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestTask {
    task_id: String,
    language: Language,
    question: String,
    gold_code: String,
    context: ManifestContext,
    #[serde(default)]
    difficulty: Option<DifficultyLevel>,
    #[serde(default)]
    predicted_code: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum ManifestContext {
    Database { database: PathBuf },
    Tests { tests: Vec<ManifestTest> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ManifestTest {
    Bare(String),
    Described { assertion: String, expected: String },
}

fn manifest_path(path: &Path) -> Result<PathBuf, TaskError> {
    let file = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    if !file.is_file() {
        return Err(TaskError::MissingManifest(file));
    }
    Ok(file)
}

/// Reads the manifest; `None` for a zero-byte file.
fn read_manifest(path: &Path) -> Result<(PathBuf, Option<Manifest>), TaskError> {
    let file = manifest_path(path)?;
    let text = fs::read_to_string(&file).map_err(|e| TaskError::MalformedManifest {
        path: file.clone(),
        reason: e.to_string(),
    })?;
    if text.trim().is_empty() {
        return Ok((file, None));
    }
    let manifest = serde_json::from_str(&text).map_err(|e| TaskError::MalformedManifest {
        path: file.clone(),
        reason: e.to_string(),
    })?;
    Ok((file, Some(manifest)))
}

/// Origin declared by the manifest at `path`, or `None` for an empty file.
pub fn read_manifest_origin(path: &Path) -> Result<Option<Origin>, TaskError> {
    Ok(read_manifest(path)?.1.map(|m| m.origin))
}

/// Loads the corpus at `path` (a manifest file or a directory holding
/// `manifest.json`), requiring it to declare `origin`.
pub fn load_corpus(path: &Path, origin: Origin) -> Result<Vec<TaskBundle>, TaskError> {
    let (file, manifest) = read_manifest(path)?;
    let Some(manifest) = manifest else {
        return Ok(Vec::new());
    };
    if manifest.origin != origin {
        return Err(TaskError::OriginMismatch {
            declared: origin,
            found: manifest.origin,
        });
    }
    build(&file, manifest)
}

/// Like [`load_corpus`], taking whatever origin the manifest declares.
pub fn load_corpus_auto(path: &Path) -> Result<(Origin, Vec<TaskBundle>), TaskError> {
    let (file, manifest) = read_manifest(path)?;
    match manifest {
        None => Ok((Origin::Custom, Vec::new())),
        Some(m) => {
            let origin = m.origin;
            Ok((origin, build(&file, m)?))
        }
    }
}

fn build(file: &Path, manifest: Manifest) -> Result<Vec<TaskBundle>, TaskError> {
    let base = file.parent().unwrap_or(Path::new("."));
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(manifest.tasks.len());
    for raw in manifest.tasks {
        if !seen.insert(raw.task_id.clone()) {
            return Err(TaskError::MalformedTask {
                task_id: raw.task_id,
                reason: "duplicate task_id".into(),
            });
        }
        let expected = match manifest.origin {
            Origin::SpiderStyle => Some(Language::Sql),
            Origin::MbppStyle => Some(Language::Python),
            Origin::Custom => None,
        };
        if expected.is_some_and(|l| l != raw.language) {
            return Err(TaskError::MalformedTask {
                task_id: raw.task_id,
                reason: format!("{} task in a {} corpus", raw.language, manifest.origin),
            });
        }
        out.push(build_task(base, manifest.origin, raw)?);
    }
    Ok(out)
}

fn build_task(base: &Path, origin: Origin, raw: ManifestTask) -> Result<TaskBundle, TaskError> {
    let malformed = |reason: String| TaskError::MalformedTask {
        task_id: raw.task_id.clone(),
        reason,
    };
    let context = match (raw.language, &raw.context) {
        (Language::Sql, ManifestContext::Database { database }) => {
            let database_ref = base.join(database);
            if !database_ref.is_file() {
                return Err(TaskError::DanglingDatabaseRef {
                    task_id: raw.task_id.clone(),
                    path: database_ref,
                });
            }
            let (schema_text, sample_rows) =
                describe_database(&database_ref).map_err(|e| malformed(format!("cannot read database: {e}")))?;
            TaskContext::Sql {
                database_ref,
                schema_text,
                sample_rows,
            }
        }
        (Language::Python, ManifestContext::Tests { tests }) => TaskContext::Python {
            test_cases: tests
                .iter()
                .map(|t| match t {
                    ManifestTest::Bare(a) => TestCase::from_assertion(a.clone()),
                    ManifestTest::Described { assertion, expected } => TestCase {
                        assertion: assertion.clone(),
                        expected: expected.clone(),
                    },
                })
                .collect(),
        },
        (Language::Sql, _) => return Err(malformed("sql task needs a database context".into())),
        (Language::Python, _) => return Err(malformed("python task needs a tests context".into())),
    };
    let mut task = TaskBundle {
        task_id: raw.task_id.clone(),
        language: raw.language,
        question: raw.question,
        context,
        gold_code: raw.gold_code,
        difficulty: None,
        origin,
    };
    task.validate()?;
    task.difficulty = match (&raw.predicted_code, raw.difficulty) {
        (Some(predicted), _) => {
            Some(classify_difficulty(&task, predicted).map_err(|e| malformed(format!("predicted_code: {e}")))?)
        }
        (None, Some(level)) => Some(DifficultyRating {
            level,
            edit_count: None,
            changed_lines: None,
            rationale: "declared in manifest".into(),
        }),
        (None, None) => None,
    };
    Ok(task)
}

/// One line per table, `name(col TYPE, ...)`, plus up to three rows each.
fn describe_database(path: &Path) -> rusqlite::Result<(String, Vec<TableSample>)> {
    let conn = db::open_read_only(path)?;
    let mut schema = String::new();
    let mut samples = Vec::new();
    for table in db::tables(&conn)? {
        let cols: Vec<String> = table
            .columns
            .iter()
            .map(|c| {
                let mut s = c.name.clone();
                if !c.decl_type.is_empty() {
                    s.push(' ');
                    s.push_str(&c.decl_type);
                }
                if c.primary_key {
                    s.push_str(" PRIMARY KEY");
                }
                s
            })
            .collect();
        schema.push_str(&format!("{}({})\n", table.name, cols.join(", ")));
        samples.push(TableSample {
            rows: db::sample_rows(&conn, &table.name, SAMPLE_ROWS_PER_TABLE)?,
            columns: table.columns.into_iter().map(|c| c.name).collect(),
            table: table.name,
        });
    }
    Ok((schema, samples))
}
