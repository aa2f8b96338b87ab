//! Label schemas and per-sample label assignments.
//!
//! A [`LabelSchema`] describes the clinical findings a corpus is scored
//! against, organized in one or more levels: level 1 holds general
//! abnormality classes, deeper levels hold structured refinements (for
//! example an opacity type crossed with laterality) linked to a parent
//! label one level up. A [`LabelMatrix`] holds the binary assignments of
//! one corpus at one schema level.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SchemaViolation};

/// One label definition inside a schema level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDef {
    pub name: String,
    /// 1-based level the label belongs to.
    pub level: usize,
    /// Name of a label at the previous level, absent for level 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

/// The hierarchical label set a corpus is scored against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub version: String,
    /// Outer index 0 is level 1.
    pub levels: Vec<Vec<LabelDef>>,
}

impl LabelSchema {
    /// Builds a schema from per-level label definitions and validates it.
    pub fn new(version: impl Into<String>, levels: Vec<Vec<LabelDef>>) -> Result<Self> {
        let schema = LabelSchema {
            version: version.into(),
            levels,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Label definitions at a 1-based level, if it exists.
    pub fn level(&self, level: usize) -> Option<&[LabelDef]> {
        if level == 0 {
            return None;
        }
        self.levels.get(level - 1).map(|v| v.as_slice())
    }

    /// Sorted label names at a 1-based level.
    pub fn label_names(&self, level: usize) -> Option<BTreeSet<String>> {
        self.level(level)
            .map(|defs| defs.iter().map(|d| d.name.clone()).collect())
    }

    /// Parent label name for `name` at `level`, when declared.
    pub fn parent_of(&self, level: usize, name: &str) -> Option<&str> {
        self.level(level)?
            .iter()
            .find(|d| d.name == name)
            .and_then(|d| d.parent.as_deref())
    }

    /// Checks every schema invariant, collecting all violations instead of
    /// stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let violations = self.collect_violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::SchemaInvalid(violations))
        }
    }

    fn collect_violations(&self) -> Vec<SchemaViolation> {
        let mut violations = Vec::new();
        if self.levels.is_empty() {
            violations.push(SchemaViolation::NoLevels);
            return violations;
        }
        let mut previous_names: BTreeSet<&str> = BTreeSet::new();
        for (idx, defs) in self.levels.iter().enumerate() {
            let level = idx + 1;
            if defs.is_empty() {
                violations.push(SchemaViolation::EmptyLevel { level });
            }
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            for def in defs {
                if def.name.is_empty() {
                    violations.push(SchemaViolation::EmptyName { level });
                    continue;
                }
                if def.level != level {
                    violations.push(SchemaViolation::WrongLevel {
                        level,
                        name: def.name.clone(),
                        stored: def.level,
                    });
                }
                if !seen.insert(&def.name) {
                    violations.push(SchemaViolation::DuplicateLabel {
                        level,
                        name: def.name.clone(),
                    });
                }
                if let Some(parent) = &def.parent {
                    if !previous_names.contains(parent.as_str()) {
                        violations.push(SchemaViolation::DanglingParent {
                            level,
                            name: def.name.clone(),
                            parent: parent.clone(),
                        });
                    }
                }
            }
            previous_names = defs.iter().map(|d| d.name.as_str()).collect();
        }
        violations
    }
}

/// Validates a schema, returning it on success and the full violation list
/// otherwise.
pub fn validate_schema(schema: &LabelSchema) -> Result<&LabelSchema> {
    schema.validate()?;
    Ok(schema)
}

/// Binary label values for one sample at one schema level.
///
/// The key set is required to match the schema level's label names exactly;
/// [`LabelMatrix::new`] enforces this across rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    pub sample_id: String,
    pub values: BTreeMap<String, bool>,
}

impl LabelAssignment {
    pub fn new(sample_id: impl Into<String>, values: BTreeMap<String, bool>) -> Self {
        LabelAssignment {
            sample_id: sample_id.into(),
            values,
        }
    }

    pub fn label_names(&self) -> BTreeSet<&str> {
        self.values.keys().map(|k| k.as_str()).collect()
    }

    /// Number of positive labels in this assignment.
    pub fn positives(&self) -> u64 {
        self.values.values().filter(|v| **v).count() as u64
    }
}

/// Per-sample binary assignments for a whole corpus at one schema level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    schema_level: usize,
    labels: Vec<String>,
    rows: Vec<LabelAssignment>,
}

impl LabelMatrix {
    /// Builds a matrix, checking that all rows share one label set and that
    /// sample ids are unique. The label set is taken from the first row.
    pub fn new(schema_level: usize, rows: Vec<LabelAssignment>) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyMatrix)?;
        let labels: Vec<String> = first.values.keys().cloned().collect();
        let label_set: BTreeSet<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut seen_ids: BTreeSet<&str> = BTreeSet::new();
        for row in &rows {
            if row.label_names() != label_set {
                return Err(Error::LabelSetMismatch {
                    sample_id: row.sample_id.clone(),
                });
            }
            if !seen_ids.insert(&row.sample_id) {
                return Err(Error::DuplicateSample {
                    sample_id: row.sample_id.clone(),
                });
            }
        }
        Ok(LabelMatrix {
            schema_level,
            labels,
            rows,
        })
    }

    pub fn schema_level(&self) -> usize {
        self.schema_level
    }

    /// Label names, sorted.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[LabelAssignment] {
        &self.rows
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, sample_id: &str) -> Option<&LabelAssignment> {
        self.rows.iter().find(|r| r.sample_id == sample_id)
    }

    /// Checks that this matrix's label set equals the schema's at its level.
    pub fn conforms_to(&self, schema: &LabelSchema) -> Result<()> {
        let expected = schema.label_names(self.schema_level).ok_or_else(|| {
            Error::InvalidInput(format!(
                "schema \"{}\" has no level {}",
                schema.version, self.schema_level
            ))
        })?;
        let actual: BTreeSet<String> = self.labels.iter().cloned().collect();
        if expected != actual {
            return Err(Error::InvalidInput(format!(
                "matrix labels do not match schema level {}: expected [{}], got [{}]",
                self.schema_level,
                expected.into_iter().collect::<Vec<_>>().join(", "),
                actual.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn def(name: &str, level: usize, parent: Option<&str>) -> LabelDef {
        LabelDef {
            name: name.to_string(),
            level,
            parent: parent.map(|p| p.to_string()),
        }
    }

    #[test]
    fn minimal_schema_is_valid() {
        let schema = LabelSchema::new("t", vec![vec![def("a", 1, None), def("b", 1, None)]]);
        assert!(schema.is_ok());
    }

    #[test]
    fn dangling_parent_is_reported() {
        let schema = LabelSchema {
            version: "t".into(),
            levels: vec![vec![def("a", 1, None)], vec![def("a_left", 2, Some("x"))]],
        };
        let err = schema.validate().unwrap_err();
        match err {
            Error::SchemaInvalid(violations) => {
                assert_eq!(
                    violations,
                    vec![SchemaViolation::DanglingParent {
                        level: 2,
                        name: "a_left".into(),
                        parent: "x".into(),
                    }]
                );
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_label_is_reported() {
        let schema = LabelSchema {
            version: "t".into(),
            levels: vec![vec![def("nodule", 1, None), def("nodule", 1, None)]],
        };
        let err = schema.validate().unwrap_err();
        match err {
            Error::SchemaInvalid(violations) => assert_eq!(
                violations,
                vec![SchemaViolation::DuplicateLabel {
                    level: 1,
                    name: "nodule".into(),
                }]
            ),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn all_violations_are_collected() {
        let schema = LabelSchema {
            version: "t".into(),
            levels: vec![
                vec![def("a", 1, None), def("a", 1, None)],
                vec![],
                vec![def("c", 2, Some("missing"))],
            ],
        };
        let err = schema.validate().unwrap_err();
        match err {
            Error::SchemaInvalid(violations) => {
                assert_eq!(violations.len(), 4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parent_at_level_one_is_dangling() {
        let schema = LabelSchema {
            version: "t".into(),
            levels: vec![vec![def("a", 1, Some("root"))]],
        };
        assert!(schema.validate().is_err());
    }

    #[test]
    fn matrix_rejects_duplicate_ids_and_mismatched_rows() {
        let mut values = BTreeMap::new();
        values.insert("a".to_string(), true);
        let row = LabelAssignment::new("s1", values.clone());
        let err = LabelMatrix::new(1, vec![row.clone(), row.clone()]).unwrap_err();
        assert!(matches!(err, Error::DuplicateSample { .. }));

        let mut other = BTreeMap::new();
        other.insert("b".to_string(), false);
        let err = LabelMatrix::new(1, vec![row, LabelAssignment::new("s2", other)]).unwrap_err();
        assert!(matches!(err, Error::LabelSetMismatch { .. }));
    }
}
