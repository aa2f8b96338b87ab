//! Corpus alignment and confusion-count aggregation.
//!
//! Predictions and references are joined on `sample_id`, then every
//! (sample, label) cell contributes to exactly one of TP/FN/FP/TN. The
//! reference value decides the positive/negative axis: reference-positive
//! cells split into TP (predicted positive) and FN (predicted negative),
//! reference-negative cells into FP and TN.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{LabelAssignment, LabelMatrix};

/// Aggregated confusion counts over (sample, label) cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fn_, fp, tn }
    }

    /// Total number of scored cells (T).
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Number of reference-positive cells (A).
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Number of reference-negative cells (T - A).
    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }

    fn record(&mut self, reference: bool, prediction: bool) {
        match (reference, prediction) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// How to treat samples present in only one of the two corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    /// Abort with an error naming every unmatched sample.
    #[default]
    Strict,
    /// Drop unmatched samples, recording them in the result.
    Lenient,
}

/// One aligned (prediction, reference) row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedRow {
    pub sample_id: String,
    pub prediction: LabelAssignment,
    pub reference: LabelAssignment,
}

/// Row pairs joined on sample id, sorted by sample id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedMatrix {
    pub schema_level: usize,
    pub rows: Vec<PairedRow>,
    /// Sample ids dropped in lenient mode, sorted.
    pub dropped: Vec<String>,
}

impl PairedMatrix {
    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labels(&self) -> usize {
        self.rows
            .first()
            .map(|r| r.reference.values.len())
            .unwrap_or(0)
    }

    /// Number of samples dropped during alignment.
    pub fn dropped_count(&self) -> usize {
        self.dropped.len()
    }
}

/// Joins two matrices on sample id.
///
/// Both matrices must target the same schema level and share one label set.
/// Output rows are sorted by sample id, so the pairing is deterministic
/// regardless of input order.
pub fn align_corpora(
    predictions: &LabelMatrix,
    references: &LabelMatrix,
    mode: AlignMode,
) -> Result<PairedMatrix> {
    if predictions.schema_level() != references.schema_level() {
        return Err(Error::LevelMismatch {
            predictions: predictions.schema_level(),
            references: references.schema_level(),
        });
    }
    if predictions.labels() != references.labels() {
        return Err(Error::InvalidInput(
            "prediction and reference matrices have different label sets".to_string(),
        ));
    }

    let pred_ids: BTreeSet<&str> = predictions
        .rows()
        .iter()
        .map(|r| r.sample_id.as_str())
        .collect();
    let ref_ids: BTreeSet<&str> = references
        .rows()
        .iter()
        .map(|r| r.sample_id.as_str())
        .collect();

    let missing_in_predictions: Vec<String> = ref_ids
        .difference(&pred_ids)
        .map(|s| s.to_string())
        .collect();
    let missing_in_references: Vec<String> = pred_ids
        .difference(&ref_ids)
        .map(|s| s.to_string())
        .collect();

    let mut dropped: Vec<String> = Vec::new();
    if !missing_in_predictions.is_empty() || !missing_in_references.is_empty() {
        match mode {
            AlignMode::Strict => {
                return Err(Error::MisalignedSamples {
                    missing_in_predictions,
                    missing_in_references,
                })
            }
            AlignMode::Lenient => {
                dropped.extend(missing_in_predictions);
                dropped.extend(missing_in_references);
                dropped.sort();
            }
        }
    }

    let pred_by_id: BTreeMap<&str, &LabelAssignment> = predictions
        .rows()
        .iter()
        .map(|r| (r.sample_id.as_str(), r))
        .collect();
    let mut rows: Vec<PairedRow> = Vec::new();
    for reference in references.rows() {
        if let Some(prediction) = pred_by_id.get(reference.sample_id.as_str()) {
            rows.push(PairedRow {
                sample_id: reference.sample_id.clone(),
                prediction: (*prediction).clone(),
                reference: reference.clone(),
            });
        }
    }
    rows.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    Ok(PairedMatrix {
        schema_level: references.schema_level(),
        rows,
        dropped,
    })
}

/// Aggregate and per-label confusion counts for one paired corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionBreakdown {
    pub aggregate: ConfusionCounts,
    pub per_label: BTreeMap<String, ConfusionCounts>,
}

/// Micro-aggregates confusion counts over every (sample, label) cell.
pub fn confusion_from_labels(paired: &PairedMatrix) -> Result<ConfusionBreakdown> {
    confusion_from_labels_masked(paired, |_, _| true)
}

/// Like [`confusion_from_labels`], but only counts cells for which `mask`
/// returns true. Used for conditional scoring of deeper schema levels,
/// where cells may be restricted to samples whose reference carries the
/// parent abnormality.
pub fn confusion_from_labels_masked(
    paired: &PairedMatrix,
    mask: impl Fn(&str, &str) -> bool,
) -> Result<ConfusionBreakdown> {
    if paired.rows.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut aggregate = ConfusionCounts::default();
    let mut per_label: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for row in &paired.rows {
        if row.prediction.label_names() != row.reference.label_names() {
            return Err(Error::LabelSetMismatch {
                sample_id: row.sample_id.clone(),
            });
        }
        for (label, reference) in &row.reference.values {
            if !mask(&row.sample_id, label) {
                continue;
            }
            let prediction = row.prediction.values[label];
            aggregate.record(*reference, prediction);
            per_label
                .entry(label.clone())
                .or_default()
                .record(*reference, prediction);
        }
    }
    Ok(ConfusionBreakdown {
        aggregate,
        per_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::LabelAssignment;

    pub(crate) fn assignment(id: &str, pairs: &[(&str, bool)]) -> LabelAssignment {
        LabelAssignment::new(id, pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub(crate) fn matrix(level: usize, rows: Vec<LabelAssignment>) -> LabelMatrix {
        LabelMatrix::new(level, rows).unwrap()
    }

    #[test]
    fn identical_id_sets_pair_fully() {
        let pred = matrix(
            1,
            vec![
                assignment("s1", &[("a", true), ("b", false)]),
                assignment("s2", &[("a", false), ("b", false)]),
            ],
        );
        let refs = matrix(
            1,
            vec![
                assignment("s2", &[("a", false), ("b", true)]),
                assignment("s1", &[("a", true), ("b", false)]),
            ],
        );
        let paired = align_corpora(&pred, &refs, AlignMode::Strict).unwrap();
        assert_eq!(paired.n_samples(), 2);
        assert_eq!(paired.rows[0].sample_id, "s1");
        assert_eq!(paired.rows[1].sample_id, "s2");
        assert!(paired.dropped.is_empty());
    }

    #[test]
    fn strict_mode_names_the_missing_sample() {
        let pred = matrix(1, vec![assignment("s1", &[("a", true)])]);
        let refs = matrix(
            1,
            vec![
                assignment("s1", &[("a", true)]),
                assignment("s2", &[("a", false)]),
            ],
        );
        let err = align_corpora(&pred, &refs, AlignMode::Strict).unwrap_err();
        match err {
            Error::MisalignedSamples {
                missing_in_predictions,
                missing_in_references,
            } => {
                assert_eq!(missing_in_predictions, vec!["s2".to_string()]);
                assert!(missing_in_references.is_empty());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_drops_and_counts() {
        let pred = matrix(1, vec![assignment("s1", &[("a", true)])]);
        let refs = matrix(
            1,
            vec![
                assignment("s1", &[("a", true)]),
                assignment("s2", &[("a", false)]),
            ],
        );
        let paired = align_corpora(&pred, &refs, AlignMode::Lenient).unwrap();
        assert_eq!(paired.n_samples(), 1);
        assert_eq!(paired.dropped, vec!["s2".to_string()]);
        assert_eq!(paired.dropped_count(), 1);
    }

    #[test]
    fn perfect_predictions_have_no_errors() {
        // 3 samples x 2 labels with 2 positives.
        let rows = vec![
            assignment("s1", &[("a", true), ("b", false)]),
            assignment("s2", &[("a", false), ("b", true)]),
            assignment("s3", &[("a", false), ("b", false)]),
        ];
        let pred = matrix(1, rows.clone());
        let refs = matrix(1, rows);
        let paired = align_corpora(&pred, &refs, AlignMode::Strict).unwrap();
        let counts = confusion_from_labels(&paired).unwrap().aggregate;
        assert_eq!(counts, ConfusionCounts::new(2, 0, 0, 4));
    }

    #[test]
    fn all_zero_predictions_miss_every_positive() {
        let refs = matrix(
            1,
            vec![
                assignment("s1", &[("a", true), ("b", false)]),
                assignment("s2", &[("a", false), ("b", true)]),
                assignment("s3", &[("a", false), ("b", false)]),
            ],
        );
        let pred = matrix(
            1,
            vec![
                assignment("s1", &[("a", false), ("b", false)]),
                assignment("s2", &[("a", false), ("b", false)]),
                assignment("s3", &[("a", false), ("b", false)]),
            ],
        );
        let paired = align_corpora(&pred, &refs, AlignMode::Strict).unwrap();
        let counts = confusion_from_labels(&paired).unwrap().aggregate;
        assert_eq!(counts, ConfusionCounts::new(0, 2, 0, 4));
    }

    #[test]
    fn per_label_counts_sum_to_aggregate() {
        let refs = matrix(
            1,
            vec![
                assignment("s1", &[("a", true), ("b", false), ("c", true)]),
                assignment("s2", &[("a", false), ("b", true), ("c", false)]),
            ],
        );
        let pred = matrix(
            1,
            vec![
                assignment("s1", &[("a", true), ("b", true), ("c", false)]),
                assignment("s2", &[("a", false), ("b", false), ("c", false)]),
            ],
        );
        let paired = align_corpora(&pred, &refs, AlignMode::Strict).unwrap();
        let breakdown = confusion_from_labels(&paired).unwrap();
        let mut summed = ConfusionCounts::default();
        for counts in breakdown.per_label.values() {
            summed.add(counts);
        }
        assert_eq!(summed, breakdown.aggregate);
        assert_eq!(breakdown.aggregate.total(), 6);
    }
}
