use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::task::Language;

pub const RESTATEMENT_COUNT: usize = 13;
pub const DESCRIPTION_COUNT: usize = 8;
pub const CORRECTION_COUNT_PER_LANGUAGE: usize = 4;

const SHIPPED: &str = include_str!("../../data/demos.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestatementTriplet {
    pub sql: String,
    pub question: String,
    pub restated: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptionPair {
    pub program: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionDemo {
    pub language: Language,
    pub question: String,
    pub code: String,
    pub explanation: String,
    pub feedback: String,
    pub corrected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodegenDemo {
    pub language: Language,
    pub question: String,
    /// Rendered schema and sample rows (SQL) or the assert list (Python).
    pub context: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoStore {
    #[serde(default)]
    pub restatement: Vec<RestatementTriplet>,
    #[serde(default)]
    pub description: Vec<DescriptionPair>,
    #[serde(default)]
    pub correction: Vec<CorrectionDemo>,
    #[serde(default)]
    pub codegen: Vec<CodegenDemo>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot read demo store: {0}")]
    Io(#[from] std::io::Error),
    #[error("demo store is not valid: {0}")]
    Parse(String),
    #[error("expected {expected} {section} demos, found {found}")]
    Count {
        section: String,
        expected: usize,
        found: usize,
    },
    #[error("{section} demo {index} has an empty {field}")]
    EmptyField {
        section: &'static str,
        index: usize,
        field: &'static str,
    },
}

fn trimmed(s: &mut String) {
    let t = s.trim_matches('\n').to_string();
    *s = t;
}

impl DemoStore {
    /// The store compiled into the crate.
    pub fn shipped() -> DemoStore {
        DemoStore::from_toml_str(SHIPPED).expect("shipped demo store is valid")
    }

    pub fn load(path: &Path) -> Result<DemoStore, StoreError> {
        DemoStore::from_toml_str(&fs::read_to_string(path)?)
    }

    /// Parses and checks a store. Leading and trailing blank lines of every
    /// field are dropped; everything else is kept byte for byte.
    pub fn from_toml_str(text: &str) -> Result<DemoStore, StoreError> {
        let mut store: DemoStore = toml::from_str(text).map_err(|e| StoreError::Parse(e.to_string()))?;
        store.normalize();
        store.check()?;
        Ok(store)
    }

    fn normalize(&mut self) {
        for d in &mut self.restatement {
            trimmed(&mut d.sql);
            trimmed(&mut d.question);
            trimmed(&mut d.restated);
        }
        for d in &mut self.description {
            trimmed(&mut d.program);
            trimmed(&mut d.description);
        }
        for d in &mut self.correction {
            for s in [
                &mut d.question,
                &mut d.code,
                &mut d.explanation,
                &mut d.feedback,
                &mut d.corrected,
            ] {
                trimmed(s);
            }
        }
        for d in &mut self.codegen {
            trimmed(&mut d.question);
            trimmed(&mut d.context);
            trimmed(&mut d.code);
        }
    }

    fn check(&self) -> Result<(), StoreError> {
        let count = |section: &str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(StoreError::Count {
                    section: section.to_string(),
                    expected,
                    found,
                })
            }
        };
        count("restatement", RESTATEMENT_COUNT, self.restatement.len())?;
        count("description", DESCRIPTION_COUNT, self.description.len())?;
        for lang in [Language::Sql, Language::Python] {
            count(
                &format!("{lang} correction"),
                CORRECTION_COUNT_PER_LANGUAGE,
                self.corrections(lang).count(),
            )?;
        }

        let empty = |section, index, field| Err(StoreError::EmptyField { section, index, field });
        for (i, d) in self.restatement.iter().enumerate() {
            for (field, v) in [("sql", &d.sql), ("question", &d.question), ("restated", &d.restated)] {
                if v.trim().is_empty() {
                    return empty("restatement", i, field);
                }
            }
        }
        for (i, d) in self.description.iter().enumerate() {
            for (field, v) in [("program", &d.program), ("description", &d.description)] {
                if v.trim().is_empty() {
                    return empty("description", i, field);
                }
            }
        }
        for (i, d) in self.correction.iter().enumerate() {
            for (field, v) in [
                ("question", &d.question),
                ("code", &d.code),
                ("explanation", &d.explanation),
                ("feedback", &d.feedback),
                ("corrected", &d.corrected),
            ] {
                if v.trim().is_empty() {
                    return empty("correction", i, field);
                }
            }
        }
        for (i, d) in self.codegen.iter().enumerate() {
            for (field, v) in [("question", &d.question), ("code", &d.code)] {
                if v.trim().is_empty() {
                    return empty("codegen", i, field);
                }
            }
        }
        Ok(())
    }

    pub fn corrections(&self, language: Language) -> impl Iterator<Item = &CorrectionDemo> {
        self.correction.iter().filter(move |d| d.language == language)
    }

    pub fn codegen_demos(&self, language: Language) -> impl Iterator<Item = &CodegenDemo> {
        self.codegen.iter().filter(move |d| d.language == language)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_counts() {
        let s = DemoStore::shipped();
        assert_eq!(s.restatement.len(), 13);
        assert_eq!(s.description.len(), 8);
        assert_eq!(s.corrections(Language::Sql).count(), 4);
        assert_eq!(s.corrections(Language::Python).count(), 4);
        assert!(s.codegen_demos(Language::Sql).count() > 0);
        assert!(s.codegen_demos(Language::Python).count() > 0);
    }

    #[test]
    fn multi_line_code_is_preserved() {
        let s = DemoStore::shipped();
        assert!(s.description[0]
            .program
            .starts_with("def count_positive(nums):\n    count = 0\n"));
        assert!(s.description[0].program.ends_with("return count"));
    }

    #[test]
    fn restatement_sql_covers_the_main_constructs() {
        let s = DemoStore::shipped();
        let all: Vec<String> = s.restatement.iter().map(|d| d.sql.to_uppercase()).collect();
        for kw in ["SELECT", "WHERE", "DISTINCT", "GROUP BY", "ORDER BY", "JOIN", "(SELECT"] {
            assert!(all.iter().any(|q| q.contains(kw)), "no demo uses {kw}");
        }
    }

    #[test]
    fn dropping_a_demo_fails_loading() {
        let text = SHIPPED.replacen("\n[[description]]\n", "\n[[ignored_description]]\n", 1);
        assert!(DemoStore::from_toml_str(&text).is_err());
        let mut store: DemoStore = toml::from_str(SHIPPED).unwrap();
        store.restatement.pop();
        let text = toml::to_string(&store).unwrap();
        match DemoStore::from_toml_str(&text) {
            Err(StoreError::Count { expected, found, .. }) => assert_eq!((expected, found), (13, 12)),
            other => panic!("expected a count error, got {other:?}"),
        }
    }

    #[test]
    fn extra_demo_fails_loading() {
        let mut store = DemoStore::shipped();
        let extra = store.correction[0].clone();
        store.correction.push(extra);
        let text = toml::to_string(&store).unwrap();
        assert!(matches!(DemoStore::from_toml_str(&text), Err(StoreError::Count { .. })));
    }
}
