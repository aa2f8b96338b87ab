//! Deterministic keyword labeler: trigger phrases, a token-window negation
//! scope bounded by sentence breaks, and a configurable uncertainty policy.
//!
//! This is a stand-in for dataset-specific labelers whose internals are not
//! published; the rule set ships as data so callers can swap in their own
//! labeler's output via label-matrix files instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nlg::tokenize::tokenize;
use crate::schema::{LabelAssignment, LabelSchema};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    /// Schema label this rule produces.
    pub label: String,
    /// Lowercase phrases whose presence asserts the finding.
    pub triggers: Vec<String>,
    /// Phrases that negate a trigger when they precede it closely enough.
    pub negation_cues: Vec<String>,
    /// Maximum token gap between a cue's end and a trigger's start.
    pub window: usize,
}

/// A full rule set for one schema level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<LabelRule>,
    /// Hedge phrases ("cannot exclude", "possible"); scoped like negation.
    #[serde(default)]
    pub uncertainty_cues: Vec<String>,
    /// Hedged mentions count as positive when true (the default: a missed
    /// finding costs more than a spurious one under FN-averse weighting).
    #[serde(default = "default_uncertain_as_positive")]
    pub uncertain_as_positive: bool,
}

fn default_uncertain_as_positive() -> bool {
    true
}

impl RuleSet {
    /// Checks every rule against the schema level it will label.
    pub fn validate(&self, schema: &LabelSchema, level: usize) -> Result<()> {
        let names = schema
            .label_names(level)
            .ok_or_else(|| Error::InvalidInput(format!("schema has no level {level}")))?;
        for rule in &self.rules {
            if !names.contains(&rule.label) {
                return Err(Error::UnknownRuleLabel {
                    label: rule.label.clone(),
                });
            }
            if rule.triggers.is_empty() || rule.triggers.iter().any(|t| t.trim().is_empty()) {
                return Err(Error::InvalidRule {
                    label: rule.label.clone(),
                    reason: "needs at least one non-empty trigger".to_string(),
                });
            }
            if rule.window == 0 {
                return Err(Error::InvalidRule {
                    label: rule.label.clone(),
                    reason: "needs window >= 1".to_string(),
                });
            }
        }
        Ok(())
    }
}

/// How a single trigger occurrence reads in context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mention {
    Affirmed,
    Negated,
    Uncertain,
}

/// Labels one report against a schema level.
///
/// A label is 1 when any trigger occurrence is affirmed, or when the only
/// occurrences are hedged and the rule set maps hedges to positive.
/// Unmentioned labels are 0: absence of a finding in the text is read as
/// the finding being absent.
pub fn rule_label(
    report_text: &str,
    rules: &RuleSet,
    schema: &LabelSchema,
    level: usize,
    sample_id: &str,
) -> Result<LabelAssignment> {
    rules.validate(schema, level)?;
    let names = schema.label_names(level).unwrap();
    let sentences: Vec<Vec<String>> = split_sentences(report_text)
        .iter()
        .map(|s| tokenize(s))
        .collect();

    let mut values: BTreeMap<String, bool> = names.iter().map(|n| (n.clone(), false)).collect();
    for rule in &rules.rules {
        let mut affirmed = false;
        let mut uncertain = false;
        for sentence in &sentences {
            for trigger in &rule.triggers {
                let trigger_toks = tokenize(trigger);
                if trigger_toks.is_empty() {
                    continue;
                }
                for start in occurrences(sentence, &trigger_toks) {
                    match classify(
                        sentence,
                        start,
                        &rule.negation_cues,
                        &rules.uncertainty_cues,
                        rule.window,
                    ) {
                        Mention::Affirmed => affirmed = true,
                        Mention::Uncertain => uncertain = true,
                        Mention::Negated => {}
                    }
                }
            }
        }
        let value = affirmed || (uncertain && rules.uncertain_as_positive);
        if value {
            values.insert(rule.label.clone(), true);
        }
    }
    Ok(LabelAssignment::new(sample_id, values))
}

/// Sentence boundaries at '.', ';', and newlines; a '.' flanked by digits
/// is a decimal point, not a boundary.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let is_decimal_point = c == '.'
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].is_ascii_digit()
            && chars[i + 1].is_ascii_digit();
        if (c == '.' && !is_decimal_point) || c == ';' || c == '\n' {
            if !current.trim().is_empty() {
                sentences.push(current.trim().to_string());
            }
            current.clear();
        } else {
            current.push(c);
        }
    }
    if !current.trim().is_empty() {
        sentences.push(current.trim().to_string());
    }
    sentences
}

/// Start indices of every occurrence of `phrase` in `tokens`.
fn occurrences(tokens: &[String], phrase: &[String]) -> Vec<usize> {
    if phrase.is_empty() || tokens.len() < phrase.len() {
        return Vec::new();
    }
    (0..=tokens.len() - phrase.len())
        .filter(|&i| tokens[i..i + phrase.len()] == *phrase)
        .collect()
}

/// Reads one trigger occurrence: negation wins over uncertainty when both
/// cues precede it within the window.
fn classify(
    sentence: &[String],
    trigger_start: usize,
    negation_cues: &[String],
    uncertainty_cues: &[String],
    window: usize,
) -> Mention {
    if cue_in_window(sentence, trigger_start, negation_cues, window) {
        Mention::Negated
    } else if cue_in_window(sentence, trigger_start, uncertainty_cues, window) {
        Mention::Uncertain
    } else {
        Mention::Affirmed
    }
}

/// True when any cue phrase ends at most `window - 1` tokens before the
/// trigger starts (a gap of `window` or more is out of scope).
fn cue_in_window(
    sentence: &[String],
    trigger_start: usize,
    cues: &[String],
    window: usize,
) -> bool {
    for cue in cues {
        let cue_toks = tokenize(cue);
        if cue_toks.is_empty() {
            continue;
        }
        for cue_start in occurrences(sentence, &cue_toks) {
            let cue_end = cue_start + cue_toks.len();
            if cue_end <= trigger_start && trigger_start - cue_end < window {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::LabelDef;

    fn schema_with(names: &[&str]) -> LabelSchema {
        let defs = names
            .iter()
            .map(|n| LabelDef {
                name: n.to_string(),
                level: 1,
                parent: None,
            })
            .collect();
        LabelSchema::new("test-v1", vec![defs]).unwrap()
    }

    fn rule(label: &str, triggers: &[&str], cues: &[&str], window: usize) -> LabelRule {
        LabelRule {
            label: label.to_string(),
            triggers: triggers.iter().map(|s| s.to_string()).collect(),
            negation_cues: cues.iter().map(|s| s.to_string()).collect(),
            window,
        }
    }

    fn set(rules: Vec<LabelRule>) -> RuleSet {
        RuleSet {
            rules,
            uncertainty_cues: vec!["cannot exclude".to_string(), "possible".to_string()],
            uncertain_as_positive: true,
        }
    }

    #[test]
    fn plain_mention_is_positive() {
        let schema = schema_with(&["cardiomegaly"]);
        let rules = set(vec![rule("cardiomegaly", &["cardiomegaly"], &["no"], 3)]);
        let a = rule_label("Cardiomegaly is present.", &rules, &schema, 1, "s1").unwrap();
        assert!(a.values["cardiomegaly"]);
    }

    #[test]
    fn negated_mention_is_negative() {
        let schema = schema_with(&["pleural_effusion"]);
        let rules = set(vec![rule(
            "pleural_effusion",
            &["pleural effusion"],
            &["no"],
            3,
        )]);
        let a = rule_label("No pleural effusion.", &rules, &schema, 1, "s1").unwrap();
        assert!(!a.values["pleural_effusion"]);
        // Cue just inside the window still negates.
        let a = rule_label("No evidence of pleural effusion.", &rules, &schema, 1, "s1").unwrap();
        assert!(!a.values["pleural_effusion"]);
    }

    #[test]
    fn cue_outside_window_does_not_negate() {
        let schema = schema_with(&["effusion"]);
        let rules = set(vec![rule("effusion", &["effusion"], &["no"], 2)]);
        // Gap of 3 tokens ("change in the") with window 2: out of scope.
        let a = rule_label("no change in the effusion", &rules, &schema, 1, "s1").unwrap();
        assert!(a.values["effusion"]);
    }

    #[test]
    fn negation_does_not_cross_sentences() {
        let schema = schema_with(&["consolidation"]);
        let rules = set(vec![rule("consolidation", &["consolidation"], &["no"], 10)]);
        let a = rule_label(
            "There is no interval change. Consolidation persists.",
            &rules,
            &schema,
            1,
            "s1",
        )
        .unwrap();
        assert!(a.values["consolidation"]);
        let a = rule_label(
            "There is no focal consolidation. Effusion persists.",
            &rules,
            &schema,
            1,
            "s1",
        )
        .unwrap();
        assert!(!a.values["consolidation"]);
    }

    #[test]
    fn any_affirmed_occurrence_wins() {
        let schema = schema_with(&["nodule"]);
        let rules = set(vec![rule("nodule", &["nodule"], &["no"], 3)]);
        let a = rule_label(
            "No nodule on the left; a nodule is seen on the right.",
            &rules,
            &schema,
            1,
            "s1",
        )
        .unwrap();
        assert!(a.values["nodule"]);
    }

    #[test]
    fn empty_report_labels_everything_negative() {
        let schema = schema_with(&["a", "b"]);
        let rules = set(vec![
            rule("a", &["alpha"], &["no"], 3),
            rule("b", &["beta"], &["no"], 3),
        ]);
        let a = rule_label("", &rules, &schema, 1, "s1").unwrap();
        assert!(a.values.values().all(|v| !v));
        // Keys still cover the whole level.
        assert_eq!(a.values.len(), 2);
    }

    #[test]
    fn uncertain_mention_follows_policy() {
        let schema = schema_with(&["pneumonia"]);
        let mut rules = set(vec![rule("pneumonia", &["pneumonia"], &["no"], 3)]);
        let a = rule_label("Cannot exclude pneumonia.", &rules, &schema, 1, "s1").unwrap();
        assert!(a.values["pneumonia"]);
        rules.uncertain_as_positive = false;
        let a = rule_label("Cannot exclude pneumonia.", &rules, &schema, 1, "s1").unwrap();
        assert!(!a.values["pneumonia"]);
    }

    #[test]
    fn negation_beats_uncertainty() {
        let schema = schema_with(&["pneumonia"]);
        let rules = set(vec![rule("pneumonia", &["pneumonia"], &["no possible"], 3)]);
        // "no possible pneumonia": the negation phrase covers the hedge.
        let a = rule_label("No possible pneumonia.", &rules, &schema, 1, "s1").unwrap();
        assert!(!a.values["pneumonia"]);
    }

    #[test]
    fn unknown_rule_label_is_refused() {
        let schema = schema_with(&["a"]);
        let rules = set(vec![rule("zz", &["zz"], &["no"], 3)]);
        let err = rule_label("text", &rules, &schema, 1, "s1").unwrap_err();
        assert!(matches!(err, Error::UnknownRuleLabel { .. }));
    }

    #[test]
    fn invalid_rules_are_refused() {
        let schema = schema_with(&["a"]);
        let no_triggers = set(vec![rule("a", &[], &["no"], 3)]);
        assert!(matches!(
            rule_label("text", &no_triggers, &schema, 1, "s1"),
            Err(Error::InvalidRule { .. })
        ));
        let zero_window = set(vec![rule("a", &["alpha"], &["no"], 0)]);
        assert!(matches!(
            rule_label("text", &zero_window, &schema, 1, "s1"),
            Err(Error::InvalidRule { .. })
        ));
    }

    #[test]
    fn deterministic_across_calls() {
        let schema = schema_with(&["effusion", "nodule"]);
        let rules = set(vec![
            rule("effusion", &["effusion"], &["no", "without"], 3),
            rule("nodule", &["nodule", "nodules"], &["no"], 3),
        ]);
        let text = "Small effusion. No nodules seen; stable otherwise.";
        let first = rule_label(text, &rules, &schema, 1, "s1").unwrap();
        for _ in 0..5 {
            assert_eq!(rule_label(text, &rules, &schema, 1, "s1").unwrap(), first);
        }
    }

    #[test]
    fn decimal_points_do_not_split_sentences() {
        assert_eq!(
            split_sentences("Nodule measures 5.5 mm. Stable."),
            vec!["Nodule measures 5.5 mm", "Stable"]
        );
        assert_eq!(split_sentences("a; b\nc"), vec!["a", "b", "c"]);
    }
}
