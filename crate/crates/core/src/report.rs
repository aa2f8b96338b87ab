//! Run output: metadata plus every computed score, renderable as a human
//! table or machine JSON.
//!
//! Reports carry no timestamps or host details, and every map inside them
//! is ordered, so identical inputs and configuration produce byte-identical
//! structured output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classical::ClassicalMetrics;
use crate::confusion::ConfusionCounts;
use crate::crg::HierarchicalCrgResult;
use crate::nlg::NlgScores;
use crate::simulate::SimulationRow;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusSizes {
    pub candidates: u64,
    pub references: u64,
    /// Samples actually scored after alignment.
    pub scored: u64,
    /// Samples dropped by lenient alignment.
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngMetadata {
    pub seed: u64,
    pub algorithm: String,
}

/// Everything needed to rerun the evaluation and get the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub corpus_sizes: CorpusSizes,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokenizer_version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngMetadata>,
    /// Final settings after flag/environment/file precedence, echoed so a
    /// report is self-describing.
    pub resolved_config: BTreeMap<String, String>,
}

impl RunMetadata {
    pub fn new() -> Self {
        RunMetadata {
            tool_version: TOOL_VERSION.to_string(),
            schema_version: None,
            corpus_sizes: CorpusSizes::default(),
            tokenizer_version: None,
            rng: None,
            resolved_config: BTreeMap::new(),
        }
    }
}

impl Default for RunMetadata {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: RunMetadata,
    pub crg: HierarchicalCrgResult,
    /// Micro metrics over the first scored level's cells.
    pub classical_micro: ClassicalMetrics,
    /// Macro metrics over the first scored level's labels.
    pub classical_macro: ClassicalMetrics,
    /// Per-label confusion counts for the first scored level.
    pub per_label: BTreeMap<String, ConfusionCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nlg: Option<NlgScores>,
    pub warnings: Vec<String>,
}

/// Machine-readable form; stable bytes for fixed inputs.
pub fn to_json(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Human-readable form.
pub fn render_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str("== scores ==\n");
    for (level, result) in report.crg.levels.iter().zip(&report.crg.per_level) {
        out.push_str(&format!(
            "crg level {level}: {:.6}   (tp {}, fn {}, fp {}, tn {}; w_tp {:.6})\n",
            result.score,
            result.counts.tp,
            result.counts.fn_,
            result.counts.fp,
            result.counts.tn,
            result.weights.w_tp,
        ));
    }
    out.push_str(&format!("crg final:   {:.6}\n", report.crg.final_score));

    for (name, m) in [
        ("micro", &report.classical_micro),
        ("macro", &report.classical_macro),
    ] {
        out.push_str(&format!(
            "\n== classical ({name}) ==\nprecision {:.6}   recall {:.6}   f1 {:.6}   accuracy {:.6}\n",
            m.precision, m.recall, m.f1, m.accuracy,
        ));
        if !m.undefined.is_empty() {
            out.push_str(&format!(
                "undefined terms (0/0) for: {}\n",
                m.undefined.join(", ")
            ));
        }
    }

    if let Some(nlg) = &report.nlg {
        out.push_str(&format!(
            "\n== nlg ==\nbleu1 {:.6}   bleu2 {:.6}   bleu3 {:.6}   bleu4 {:.6}\nrouge_l {:.6}   meteor {:.6}   cider {:.6}\n",
            nlg.bleu1, nlg.bleu2, nlg.bleu3, nlg.bleu4, nlg.rouge_l, nlg.meteor, nlg.cider,
        ));
    }

    if !report.per_label.is_empty() {
        out.push_str("\n== per-label counts ==\n");
        let width = report.per_label.keys().map(|k| k.len()).max().unwrap_or(0);
        for (label, c) in &report.per_label {
            out.push_str(&format!(
                "{label:width$}  tp {:>6}  fn {:>6}  fp {:>6}  tn {:>6}\n",
                c.tp, c.fn_, c.fp, c.tn,
            ));
        }
    }

    if !report.warnings.is_empty() {
        out.push_str("\n== warnings ==\n");
        for w in &report.warnings {
            out.push_str(&format!("- {w}\n"));
        }
    }

    out.push_str(&format!(
        "\nscored {} sample(s); dropped {}; tool {}\n",
        report.metadata.corpus_sizes.scored,
        report.metadata.corpus_sizes.dropped,
        report.metadata.tool_version,
    ));
    out
}

/// Simulation sweep as an aligned table, one row per configuration.
pub fn render_simulation_table(rows: &[SimulationRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>10}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  predictor\n",
        "prevalence", "accuracy", "precision", "recall", "f1", "crg",
    ));
    for row in rows {
        let predictor = match row.spec.predictor {
            crate::simulate::Predictor::AlwaysNegative => "always_negative".to_string(),
            crate::simulate::Predictor::AlwaysPositive => "always_positive".to_string(),
            crate::simulate::Predictor::Noisy {
                sensitivity,
                specificity,
            } => format!("noisy({sensitivity}, {specificity})"),
        };
        out.push_str(&format!(
            "{:>10.4}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9.6}  {predictor}\n",
            row.spec.prevalence, row.accuracy, row.precision, row.recall, row.f1, row.crg,
        ));
    }
    out
}

/// Simulation sweep as machine JSON.
pub fn simulation_to_json(rows: &[SimulationRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}
