//! Orchestration: turn raw inputs (text corpora, label matrices, or bare
//! counts) into a full evaluation report.
//!
//! Three routes feed the same scoring core. Text inputs get labeled first;
//! label matrices are scored directly; a counts file skips straight to the
//! aggregate scores for audit runs. Surface metrics run whenever raw text
//! is available and enabled.

use std::collections::BTreeMap;

use crate::classical::{macro_metrics, micro_metrics, ZeroDivisionPolicy};
use crate::confusion::{
    align_corpora, confusion_from_labels_masked, AlignMode, ConfusionBreakdown, ConfusionCounts,
};
use crate::crg::{crg_hierarchical_from_counts, HierarchicalCrgResult};
use crate::error::{Error, Result};
use crate::io::ReportRecord;
use crate::labeler::{rule_label, RuleSet};
use crate::nlg::{score_all, NlgConfig, ReportPair, TOKENIZER_VERSION};
use crate::report::{CorpusSizes, EvaluationReport, RunMetadata};
use crate::schema::{LabelMatrix, LabelSchema};
use crate::simulate::{run_simulation, SimulationRow, SimulationSpec};

/// Everything a scoring run may consume. Unused routes stay `None`/empty.
#[derive(Debug, Default)]
pub struct ScoreRequest {
    pub candidates_text: Option<Vec<ReportRecord>>,
    pub references_text: Option<Vec<ReportRecord>>,
    /// (prediction, reference) matrices, one pair per schema level.
    pub label_pairs: Vec<(LabelMatrix, LabelMatrix)>,
    /// Per-level counts for audit runs; bypasses label alignment.
    pub counts: Vec<(usize, ConfusionCounts)>,
    pub schema: Option<LabelSchema>,
    pub rules: Option<RuleSet>,
    /// Schema level the rule labeler targets for text inputs.
    pub level: usize,
    pub align_mode: AlignMode,
    pub nlg_enabled: bool,
    pub nlg_config: NlgConfig,
    /// Score levels past the first only on cells whose parent finding is
    /// reference-positive at level 1. Off by default: parent-negative
    /// cells then count as ordinary reference-negative cells.
    pub conditional_deeper_levels: bool,
    /// Settings echo for the report, already resolved by the caller.
    pub resolved_config: BTreeMap<String, String>,
}

impl ScoreRequest {
    pub fn new() -> Self {
        ScoreRequest {
            level: 1,
            ..Default::default()
        }
    }
}

/// Runs the full pipeline for one request.
pub fn run_score(request: &ScoreRequest) -> Result<EvaluationReport> {
    let mut warnings = Vec::new();
    let mut metadata = RunMetadata::new();
    metadata.schema_version = request.schema.as_ref().map(|s| s.version.clone());
    metadata.resolved_config = request.resolved_config.clone();

    let (crg, micro, macro_, per_label, sizes) = if !request.counts.is_empty() {
        score_counts_route(request, &mut warnings)?
    } else {
        score_label_route(request, &mut warnings)?
    };
    metadata.corpus_sizes = sizes;

    let nlg = if request.nlg_enabled {
        match (&request.candidates_text, &request.references_text) {
            (Some(cands), Some(refs)) => {
                let pairs = pair_reports(cands, refs, request.align_mode)?;
                let (scores, mut nlg_warnings) = score_all(&pairs, &request.nlg_config)?;
                warnings.append(&mut nlg_warnings);
                metadata.tokenizer_version = Some(TOKENIZER_VERSION.to_string());
                Some(scores)
            }
            _ => {
                warnings.push(
                    "surface metrics requested but no raw text provided; skipped".to_string(),
                );
                None
            }
        }
    } else {
        None
    };

    Ok(EvaluationReport {
        metadata,
        crg,
        classical_micro: micro,
        classical_macro: macro_,
        per_label,
        nlg,
        warnings,
    })
}

type RouteOutput = (
    HierarchicalCrgResult,
    crate::classical::ClassicalMetrics,
    crate::classical::ClassicalMetrics,
    BTreeMap<String, ConfusionCounts>,
    CorpusSizes,
);

fn score_counts_route(request: &ScoreRequest, warnings: &mut Vec<String>) -> Result<RouteOutput> {
    let crg = crg_hierarchical_from_counts(&request.counts)?;
    let first = &request.counts[0].1;
    let micro = micro_metrics(first)?;
    // Counts carry no per-label structure; the macro view collapses to the
    // pooled cells and is flagged so nobody reads it as label-balanced.
    let mut pooled = BTreeMap::new();
    pooled.insert("all".to_string(), *first);
    let macro_ = macro_metrics(&pooled, ZeroDivisionPolicy::ReportZero)?;
    warnings
        .push("counts-only input: macro metrics equal micro (no per-label structure)".to_string());
    Ok((crg, micro, macro_, BTreeMap::new(), CorpusSizes::default()))
}

fn score_label_route(request: &ScoreRequest, warnings: &mut Vec<String>) -> Result<RouteOutput> {
    let owned_pair;
    let label_pairs: &[(LabelMatrix, LabelMatrix)] = if request.label_pairs.is_empty() {
        owned_pair = [label_texts(request)?];
        &owned_pair
    } else {
        &request.label_pairs
    };

    let mut sizes = CorpusSizes::default();
    let mut level_counts = Vec::with_capacity(label_pairs.len());
    let mut first_breakdown: Option<ConfusionBreakdown> = None;
    let level1_reference = label_pairs
        .iter()
        .find(|(_, r)| r.schema_level() == 1)
        .map(|(_, r)| r.clone());

    for (predictions, references) in label_pairs {
        let level = references.schema_level();
        if let Some(schema) = &request.schema {
            predictions
                .conforms_to(schema)
                .and_then(|_| references.conforms_to(schema))
                .map_err(|source| Error::LevelFailed {
                    level,
                    source: Box::new(source),
                })?;
        }
        let paired = align_corpora(predictions, references, request.align_mode)?;
        if level == label_pairs[0].1.schema_level() {
            sizes.candidates = predictions.n_samples() as u64;
            sizes.references = references.n_samples() as u64;
            sizes.scored = paired.n_samples() as u64;
            sizes.dropped = paired.dropped_count() as u64;
        }
        if !paired.dropped.is_empty() {
            warnings.push(format!(
                "level {level}: dropped unmatched sample(s): {}",
                paired.dropped.join(", ")
            ));
        }

        let conditional = request.conditional_deeper_levels && level > 1;
        let breakdown = if conditional {
            let schema = request.schema.as_ref().ok_or_else(|| {
                Error::InvalidInput(
                    "conditional deeper-level scoring needs a schema with parents".to_string(),
                )
            })?;
            let parents_reference = level1_reference.as_ref().ok_or_else(|| {
                Error::InvalidInput(
                    "conditional deeper-level scoring needs a level-1 reference matrix".to_string(),
                )
            })?;
            confusion_from_labels_masked(&paired, |sample_id, label| {
                let Some(parent) = schema.parent_of(level, label) else {
                    return true;
                };
                parents_reference
                    .row(sample_id)
                    .and_then(|row| row.values.get(parent).copied())
                    .unwrap_or(true)
            })?
        } else {
            confusion_from_labels_masked(&paired, |_, _| true)?
        };
        if first_breakdown.is_none() {
            first_breakdown = Some(breakdown.clone());
        }
        level_counts.push((level, breakdown.aggregate));
    }

    let crg = crg_hierarchical_from_counts(&level_counts)?;
    let breakdown = first_breakdown.expect("at least one level scored");
    let micro = micro_metrics(&breakdown.aggregate)?;
    let macro_ = macro_metrics(&breakdown.per_label, ZeroDivisionPolicy::ReportZero)?;
    Ok((crg, micro, macro_, breakdown.per_label, sizes))
}

/// Labels both text corpora with the rule set, producing one matrix pair.
fn label_texts(request: &ScoreRequest) -> Result<(LabelMatrix, LabelMatrix)> {
    let (Some(candidates), Some(references)) = (&request.candidates_text, &request.references_text)
    else {
        return Err(Error::InvalidInput(
            "nothing to score: provide text corpora, label matrices, or counts".to_string(),
        ));
    };
    let schema = request
        .schema
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("text scoring needs a schema".to_string()))?;
    let rules = request
        .rules
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("text scoring needs a rule set".to_string()))?;
    let label_corpus = |records: &[ReportRecord]| -> Result<LabelMatrix> {
        let rows = records
            .iter()
            .map(|r| rule_label(&r.text, rules, schema, request.level, &r.sample_id))
            .collect::<Result<Vec<_>>>()?;
        LabelMatrix::new(request.level, rows)
    };
    Ok((label_corpus(candidates)?, label_corpus(references)?))
}

/// Joins candidate and reference texts on sample id for surface scoring.
pub fn pair_reports(
    candidates: &[ReportRecord],
    references: &[ReportRecord],
    mode: AlignMode,
) -> Result<Vec<ReportPair>> {
    let ref_by_id: BTreeMap<&str, &str> = references
        .iter()
        .map(|r| (r.sample_id.as_str(), r.text.as_str()))
        .collect();
    let cand_ids: std::collections::BTreeSet<&str> =
        candidates.iter().map(|c| c.sample_id.as_str()).collect();
    if mode == AlignMode::Strict {
        let missing_in_candidates: Vec<String> = ref_by_id
            .keys()
            .filter(|id| !cand_ids.contains(**id))
            .map(|s| s.to_string())
            .collect();
        let missing_in_references: Vec<String> = candidates
            .iter()
            .filter(|c| !ref_by_id.contains_key(c.sample_id.as_str()))
            .map(|c| c.sample_id.clone())
            .collect();
        if !missing_in_candidates.is_empty() || !missing_in_references.is_empty() {
            return Err(Error::MisalignedSamples {
                missing_in_predictions: missing_in_candidates,
                missing_in_references,
            });
        }
    }
    let mut pairs: Vec<ReportPair> = candidates
        .iter()
        .filter_map(|c| {
            ref_by_id.get(c.sample_id.as_str()).map(|text| ReportPair {
                sample_id: c.sample_id.clone(),
                candidate: c.text.clone(),
                reference: text.to_string(),
            })
        })
        .collect();
    pairs.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(pairs)
}

/// Runs each configuration in order with its own seed.
pub fn run_simulate(specs: &[SimulationSpec]) -> Result<Vec<SimulationRow>> {
    specs.iter().map(run_simulation).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeler::LabelRule;
    use crate::schema::LabelDef;

    fn schema() -> LabelSchema {
        LabelSchema::new(
            "fixture-v1",
            vec![vec![
                LabelDef {
                    name: "effusion".to_string(),
                    level: 1,
                    parent: None,
                },
                LabelDef {
                    name: "nodule".to_string(),
                    level: 1,
                    parent: None,
                },
            ]],
        )
        .unwrap()
    }

    fn rules() -> RuleSet {
        RuleSet {
            rules: vec![
                LabelRule {
                    label: "effusion".to_string(),
                    triggers: vec!["effusion".to_string()],
                    negation_cues: vec!["no".to_string()],
                    window: 3,
                },
                LabelRule {
                    label: "nodule".to_string(),
                    triggers: vec!["nodule".to_string()],
                    negation_cues: vec!["no".to_string()],
                    window: 3,
                },
            ],
            uncertainty_cues: Vec::new(),
            uncertain_as_positive: true,
        }
    }

    fn records(texts: &[(&str, &str)]) -> Vec<ReportRecord> {
        texts
            .iter()
            .map(|(id, text)| ReportRecord {
                sample_id: id.to_string(),
                text: text.to_string(),
            })
            .collect()
    }

    fn text_request(cands: Vec<ReportRecord>, refs: Vec<ReportRecord>) -> ScoreRequest {
        let mut request = ScoreRequest::new();
        request.candidates_text = Some(cands);
        request.references_text = Some(refs);
        request.schema = Some(schema());
        request.rules = Some(rules());
        request.nlg_enabled = true;
        request
    }

    #[test]
    fn identical_text_corpora_score_perfectly() {
        let texts = records(&[
            ("s1", "Small effusion on the left."),
            ("s2", "No nodule. Lungs otherwise clear."),
            ("s3", "A nodule is seen; no effusion."),
        ]);
        let report = run_score(&text_request(texts.clone(), texts)).unwrap();
        assert_eq!(report.crg.final_score, 1.0);
        let nlg = report.nlg.unwrap();
        assert_eq!(nlg.bleu4, 1.0);
        assert_eq!(report.metadata.corpus_sizes.scored, 3);
        assert_eq!(
            report.metadata.tokenizer_version.as_deref(),
            Some(TOKENIZER_VERSION)
        );
    }

    #[test]
    fn empty_candidates_score_the_trivial_third() {
        let refs = records(&[
            ("s1", "Small effusion on the left."),
            ("s2", "A nodule is seen."),
        ]);
        let cands = records(&[("s1", ""), ("s2", "")]);
        let report = run_score(&text_request(cands, refs)).unwrap();
        assert_eq!(report.crg.final_score, 1.0 / 3.0);
    }

    #[test]
    fn counts_route_reproduces_published_row() {
        let mut request = ScoreRequest::new();
        request.counts = vec![(1, ConfusionCounts::new(2224, 8311, 3081, 41086))];
        let report = run_score(&request).unwrap();
        assert!((report.crg.final_score - 0.368).abs() <= 0.001);
        assert!(report.warnings.iter().any(|w| w.contains("counts-only")));
        assert!(report.nlg.is_none());
    }

    #[test]
    fn label_route_equals_text_route_on_same_labels() {
        // Pipeline composability: labeling text first and feeding the
        // matrices back produces the identical scores.
        let cands = records(&[
            ("s1", "Effusion present."),
            ("s2", "No effusion. Nodule seen."),
        ]);
        let refs = records(&[("s1", "Effusion and a nodule."), ("s2", "No findings.")]);
        let text_report = run_score(&text_request(cands.clone(), refs.clone())).unwrap();

        let s = schema();
        let r = rules();
        let to_matrix = |recs: &[ReportRecord]| {
            LabelMatrix::new(
                1,
                recs.iter()
                    .map(|rec| rule_label(&rec.text, &r, &s, 1, &rec.sample_id).unwrap())
                    .collect(),
            )
            .unwrap()
        };
        let mut request = ScoreRequest::new();
        request.label_pairs = vec![(to_matrix(&cands), to_matrix(&refs))];
        request.schema = Some(s);
        let label_report = run_score(&request).unwrap();

        assert_eq!(label_report.crg.final_score, text_report.crg.final_score);
        assert_eq!(label_report.classical_micro, text_report.classical_micro);
        assert_eq!(label_report.per_label, text_report.per_label);
    }

    #[test]
    fn missing_inputs_are_refused() {
        let request = ScoreRequest::new();
        assert!(matches!(run_score(&request), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn conditional_deeper_level_masks_parent_negative_cells() {
        let two_level = LabelSchema::new(
            "fixture-v2",
            vec![
                vec![LabelDef {
                    name: "opacity".to_string(),
                    level: 1,
                    parent: None,
                }],
                vec![
                    LabelDef {
                        name: "opacity_left".to_string(),
                        level: 2,
                        parent: Some("opacity".to_string()),
                    },
                    LabelDef {
                        name: "opacity_right".to_string(),
                        level: 2,
                        parent: Some("opacity".to_string()),
                    },
                ],
            ],
        )
        .unwrap();
        let assignment = |id: &str, pairs: &[(&str, bool)]| {
            crate::schema::LabelAssignment::new(
                id,
                pairs
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect::<BTreeMap<_, _>>(),
            )
        };
        // s1 has the parent finding; s2 does not. The candidate hallucinates
        // opacity_left on s2, which only counts when the mask is off.
        let l1_ref = LabelMatrix::new(
            1,
            vec![
                assignment("s1", &[("opacity", true)]),
                assignment("s2", &[("opacity", false)]),
            ],
        )
        .unwrap();
        let l1_pred = l1_ref.clone();
        let l2_ref = LabelMatrix::new(
            2,
            vec![
                assignment("s1", &[("opacity_left", true), ("opacity_right", false)]),
                assignment("s2", &[("opacity_left", false), ("opacity_right", false)]),
            ],
        )
        .unwrap();
        let l2_pred = LabelMatrix::new(
            2,
            vec![
                assignment("s1", &[("opacity_left", true), ("opacity_right", false)]),
                assignment("s2", &[("opacity_left", true), ("opacity_right", false)]),
            ],
        )
        .unwrap();

        let mut request = ScoreRequest::new();
        request.label_pairs = vec![
            (l1_pred.clone(), l1_ref.clone()),
            (l2_pred.clone(), l2_ref.clone()),
        ];
        request.schema = Some(two_level.clone());
        let unconditional = run_score(&request).unwrap();
        // Level 2 unmasked: tp=1, fp=1, tn=2 over 4 cells.
        assert_eq!(
            unconditional.crg.per_level[1].counts,
            ConfusionCounts::new(1, 0, 1, 2)
        );

        request.conditional_deeper_levels = true;
        let conditional = run_score(&request).unwrap();
        // s2's cells are parent-negative in the level-1 reference: masked.
        assert_eq!(
            conditional.crg.per_level[1].counts,
            ConfusionCounts::new(1, 0, 0, 1)
        );
        assert!(conditional.crg.final_score > unconditional.crg.final_score);
    }

    #[test]
    fn lenient_alignment_drops_and_warns() {
        let cands = records(&[("s1", "Effusion."), ("s2", "Nodule.")]);
        let refs = records(&[("s1", "Effusion."), ("s3", "Clear.")]);
        let mut request = text_request(cands, refs);
        request.align_mode = AlignMode::Lenient;
        let report = run_score(&request).unwrap();
        assert_eq!(report.metadata.corpus_sizes.scored, 1);
        assert_eq!(report.metadata.corpus_sizes.dropped, 2);
        assert!(report.warnings.iter().any(|w| w.contains("dropped")));
    }

    #[test]
    fn structured_output_is_byte_identical_across_runs() {
        let texts = records(&[
            ("s1", "Small effusion on the left."),
            ("s2", "No nodule seen."),
        ]);
        let refs = records(&[
            ("s1", "Left effusion present."),
            ("s2", "A nodule is seen."),
        ]);
        let a = run_score(&text_request(texts.clone(), refs.clone())).unwrap();
        let b = run_score(&text_request(texts, refs)).unwrap();
        assert_eq!(crate::report::to_json(&a), crate::report::to_json(&b));
    }
}
