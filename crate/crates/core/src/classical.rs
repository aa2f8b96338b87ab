//! Baseline classification metrics over binary label matrices:
//! precision, recall, F1, and accuracy with micro and macro averaging.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::confusion::{ConfusionBreakdown, ConfusionCounts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Pool all (sample, label) cells into one confusion table first.
    Micro,
    /// Score each label separately, then average the per-label metrics.
    Macro,
}

/// What to do when a per-label metric divides by zero under macro averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDivisionPolicy {
    /// Count the metric as 0 and keep the label in the average.
    #[default]
    ReportZero,
    /// Drop the label from that metric's average entirely.
    SkipLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub averaging: Averaging,
    /// Labels whose precision or recall was undefined (0/0) during macro
    /// averaging; empty for micro.
    pub undefined: Vec<String>,
}

fn precision_of(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.tp + c.fp;
    (denom > 0).then(|| c.tp as f64 / denom as f64)
}

fn recall_of(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.tp + c.fn_;
    (denom > 0).then(|| c.tp as f64 / denom as f64)
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn accuracy_of(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

/// Micro-averaged metrics: one confusion table over every cell.
pub fn micro_metrics(counts: &ConfusionCounts) -> Result<ClassicalMetrics> {
    if counts.total() == 0 {
        return Err(Error::EmptyInput);
    }
    let precision = precision_of(counts).unwrap_or(0.0);
    let recall = recall_of(counts).unwrap_or(0.0);
    Ok(ClassicalMetrics {
        precision,
        recall,
        f1: f1_of(precision, recall),
        accuracy: accuracy_of(counts)?,
        averaging: Averaging::Micro,
        undefined: Vec::new(),
    })
}

/// Macro-averaged metrics: per-label metrics averaged with equal weight.
pub fn macro_metrics(
    per_label: &BTreeMap<String, ConfusionCounts>,
    policy: ZeroDivisionPolicy,
) -> Result<ClassicalMetrics> {
    if per_label.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut undefined = Vec::new();
    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    let mut f1s = Vec::new();
    let mut accuracies = Vec::new();
    for (label, counts) in per_label {
        let p = precision_of(counts);
        let r = recall_of(counts);
        if p.is_none() || r.is_none() {
            undefined.push(label.clone());
        }
        match policy {
            ZeroDivisionPolicy::ReportZero => {
                let p = p.unwrap_or(0.0);
                let r = r.unwrap_or(0.0);
                precisions.push(p);
                recalls.push(r);
                f1s.push(f1_of(p, r));
            }
            ZeroDivisionPolicy::SkipLabel => {
                if let Some(p) = p {
                    precisions.push(p);
                }
                if let Some(r) = r {
                    recalls.push(r);
                }
                if let (Some(p), Some(r)) = (p, r) {
                    f1s.push(f1_of(p, r));
                }
            }
        }
        accuracies.push(accuracy_of(counts)?);
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(ClassicalMetrics {
        precision: mean(&precisions),
        recall: mean(&recalls),
        f1: mean(&f1s),
        accuracy: mean(&accuracies),
        averaging: Averaging::Macro,
        undefined,
    })
}

/// Both averaging modes from one breakdown, in (micro, macro) order.
pub fn metrics_from_breakdown(
    breakdown: &ConfusionBreakdown,
    policy: ZeroDivisionPolicy,
) -> Result<(ClassicalMetrics, ClassicalMetrics)> {
    Ok((
        micro_metrics(&breakdown.aggregate)?,
        macro_metrics(&breakdown.per_label, policy)?,
    ))
}
