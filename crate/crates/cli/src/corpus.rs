//! On-disk corpora.
//!
//! A corpus is either a directory of `*.tree` files, where the case id is
//! the file stem, or a JSON Lines file with one `{"id", "tree", "report"}`
//! record per case. `report` is optional and ignored by scoring.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use causal_tree_core::{parse_forest, CausalForest, ParseDiagnostic, ParseOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub tree: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

/// Reads every case, sorted by id. Duplicate or malformed ids are data
/// errors; a missing or unreadable path is an IO error.
pub fn load_corpus(path: &Path) -> Result<Vec<CaseRecord>, CliError> {
    let meta = fs::metadata(path).map_err(|e| CliError::io(path, e))?;
    let mut cases = if meta.is_dir() {
        load_dir(path)?
    } else {
        load_records(path)?
    };
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let mut seen = BTreeSet::new();
    let dups: BTreeSet<&str> = cases
        .iter()
        .filter(|c| !seen.insert(c.id.as_str()))
        .map(|c| c.id.as_str())
        .collect();
    if !dups.is_empty() {
        return Err(CliError::data(format!(
            "{}: duplicate case ids: {}",
            path.display(),
            dups.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    if let Some(bad) = cases.iter().find(|c| !valid_case_id(&c.id)) {
        return Err(CliError::data(format!(
            "{}: invalid case id {:?}",
            path.display(),
            bad.id
        )));
    }
    Ok(cases)
}

fn valid_case_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_control)
}

fn load_dir(dir: &Path) -> Result<Vec<CaseRecord>, CliError> {
    let mut cases = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "tree") && path.is_file() {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| {
                    CliError::data(format!("{}: file name is not UTF-8", path.display()))
                })?
                .to_string();
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            let tree = String::from_utf8(bytes)
                .map_err(|_| CliError::data(format!("{}: not valid UTF-8", path.display())))?;
            cases.push(CaseRecord {
                id,
                tree,
                report: None,
            });
        }
    }
    Ok(cases)
}

fn load_records(path: &Path) -> Result<Vec<CaseRecord>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut cases = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => {
                CliError::data(format!("{}:{}: not valid UTF-8", path.display(), i + 1))
            }
            _ => CliError::io(path, e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CaseRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        cases.push(record);
    }
    Ok(cases)
}

/// Diagnostics for one case that failed to parse.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseFailure {
    pub case_id: String,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl CaseFailure {
    pub fn render(&self) -> String {
        self.diagnostics
            .iter()
            .map(|d| format!("{}: {d}\n", self.case_id))
            .collect()
    }
}

/// Parses every case; failures are collected rather than aborting.
pub fn parse_corpus(
    cases: &[CaseRecord],
    options: &ParseOptions,
) -> (Vec<CausalForest>, Vec<CaseFailure>) {
    let mut forests = Vec::with_capacity(cases.len());
    let mut failures = Vec::new();
    for case in cases {
        match parse_forest(&case.tree, options) {
            Ok(forest) => forests.push(forest.with_case_id(case.id.clone())),
            Err(diagnostics) => failures.push(CaseFailure {
                case_id: case.id.clone(),
                diagnostics,
            }),
        }
    }
    (forests, failures)
}
