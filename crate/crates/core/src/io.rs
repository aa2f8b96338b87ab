//! File formats: schema and rule files (JSON), label matrices and report
//! corpora (JSON lines), counts and frozen-weight files (JSON).
//!
//! Loads are strict: malformed content is reported with its path and line,
//! duplicate sample ids are named, and emit-then-load reproduces the
//! in-memory value exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionCounts;
use crate::crg::CrgWeights;
use crate::error::{Error, Result};
use crate::labeler::{LabelRule, RuleSet};
use crate::schema::{LabelAssignment, LabelDef, LabelMatrix, LabelSchema};

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|cause| Error::Io {
        path: path.to_path_buf(),
        cause,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFileLabel {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFileLevel {
    labels: Vec<SchemaFileLabel>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFile {
    version: String,
    levels: Vec<SchemaFileLevel>,
}

/// Loads and validates a label schema.
pub fn load_schema(path: &Path) -> Result<LabelSchema> {
    let text = read_file(path)?;
    let file: SchemaFile = serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    let levels = file
        .levels
        .into_iter()
        .enumerate()
        .map(|(i, level)| {
            level
                .labels
                .into_iter()
                .map(|l| LabelDef {
                    name: l.name,
                    level: i + 1,
                    parent: l.parent,
                })
                .collect()
        })
        .collect();
    LabelSchema::new(file.version, levels)
}

pub fn save_schema(path: &Path, schema: &LabelSchema) -> Result<()> {
    let file = SchemaFile {
        version: schema.version.clone(),
        levels: (1..=schema.level_count())
            .map(|i| SchemaFileLevel {
                labels: schema
                    .level(i)
                    .unwrap()
                    .iter()
                    .map(|d| SchemaFileLabel {
                        name: d.name.clone(),
                        parent: d.parent.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    write_file(path, &pretty_json(&file))
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixHeader {
    schema_level: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixRow {
    sample_id: String,
    labels: BTreeMap<String, u8>,
}

/// Loads a label matrix: a header line `{"schema_level": k}` followed by
/// one `{sample_id, labels: {name: 0|1}}` record per line.
pub fn load_label_matrix(path: &Path) -> Result<LabelMatrix> {
    let text = read_file(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (header_idx, header_line) = lines.next().ok_or_else(|| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: 1,
        reason: "empty file; expected a schema_level header record".to_string(),
    })?;
    let header: MatrixHeader =
        serde_json::from_str(header_line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: header_idx + 1,
            reason: format!("bad header record: {e}"),
        })?;

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let row: MatrixRow = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: e.to_string(),
        })?;
        let mut values = BTreeMap::new();
        for (label, bit) in row.labels {
            let value = match bit {
                0 => false,
                1 => true,
                other => {
                    return Err(Error::MalformedRecord {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        reason: format!("label \"{label}\" has non-binary value {other}"),
                    })
                }
            };
            values.insert(label, value);
        }
        rows.push(LabelAssignment::new(row.sample_id, values));
    }
    LabelMatrix::new(header.schema_level, rows)
}

pub fn save_label_matrix(path: &Path, matrix: &LabelMatrix) -> Result<()> {
    write_file(path, &matrix_to_jsonl(matrix))
}

/// The matrix in its serialized form: a header line, then one row per
/// sample, each value written as 0 or 1.
pub fn matrix_to_jsonl(matrix: &LabelMatrix) -> String {
    let mut out = String::new();
    out.push_str(&compact_json(&MatrixHeader {
        schema_level: matrix.schema_level(),
    }));
    out.push('\n');
    for row in matrix.rows() {
        let labels: BTreeMap<String, u8> = row
            .values
            .iter()
            .map(|(k, &v)| (k.clone(), v as u8))
            .collect();
        out.push_str(&compact_json(&MatrixRow {
            sample_id: row.sample_id.clone(),
            labels,
        }));
        out.push('\n');
    }
    out
}

/// One free-text report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub sample_id: String,
    pub text: String,
}

/// Loads a report corpus: one `{sample_id, text}` record per line.
pub fn load_report_corpus(path: &Path) -> Result<Vec<ReportRecord>> {
    let text = read_file(path)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportRecord =
            serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
        if !seen.insert(record.sample_id.clone()) {
            return Err(Error::DuplicateSample {
                sample_id: record.sample_id,
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(records)
}

pub fn save_report_corpus(path: &Path, records: &[ReportRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&compact_json(record));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Loads a counts file: four named integers tp/fn/fp/tn.
pub fn load_counts(path: &Path) -> Result<ConfusionCounts> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

pub fn save_counts(path: &Path, counts: &ConfusionCounts) -> Result<()> {
    write_file(path, &pretty_json(counts))
}

/// Rule file shape: per-rule cue lists and windows are optional and fall
/// back to file-level defaults, so common cues are written once.
#[derive(Debug, Serialize, Deserialize)]
struct RuleFile {
    #[serde(default)]
    default_negation_cues: Vec<String>,
    #[serde(default = "default_window")]
    default_window: usize,
    #[serde(default)]
    uncertainty_cues: Vec<String>,
    #[serde(default = "default_true")]
    uncertain_as_positive: bool,
    rules: Vec<RuleFileEntry>,
}

fn default_window() -> usize {
    5
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleFileEntry {
    label: String,
    triggers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    negation_cues: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
}

/// Loads a rule set, materializing file-level defaults into each rule.
pub fn load_rules(path: &Path) -> Result<RuleSet> {
    let text = read_file(path)?;
    let file: RuleFile = serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    let rules = file
        .rules
        .into_iter()
        .map(|entry| LabelRule {
            label: entry.label,
            triggers: entry.triggers,
            negation_cues: entry
                .negation_cues
                .unwrap_or_else(|| file.default_negation_cues.clone()),
            window: entry.window.unwrap_or(file.default_window),
        })
        .collect();
    Ok(RuleSet {
        rules,
        uncertainty_cues: file.uncertainty_cues,
        uncertain_as_positive: file.uncertain_as_positive,
    })
}

pub fn save_rules(path: &Path, rules: &RuleSet) -> Result<()> {
    // Saved fully materialized; defaults are an input convenience only.
    let file = RuleFile {
        default_negation_cues: Vec::new(),
        default_window: default_window(),
        uncertainty_cues: rules.uncertainty_cues.clone(),
        uncertain_as_positive: rules.uncertain_as_positive,
        rules: rules
            .rules
            .iter()
            .map(|r| RuleFileEntry {
                label: r.label.clone(),
                triggers: r.triggers.clone(),
                negation_cues: Some(r.negation_cues.clone()),
                window: Some(r.window),
            })
            .collect(),
    };
    write_file(path, &pretty_json(&file))
}

/// Loads frozen scoring weights saved by `save_weights`.
pub fn load_weights(path: &Path) -> Result<CrgWeights> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

pub fn save_weights(path: &Path, weights: &CrgWeights) -> Result<()> {
    write_file(path, &pretty_json(weights))
}

/// Pretty JSON with a trailing newline, the form every file emitter uses.
pub fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn compact_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}
