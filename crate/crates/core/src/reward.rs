//! Per-sample and batch rewards for reinforcement-learning loops.
//!
//! The corpus score only exists at corpus scale, so the reward applies the
//! same normalized form at sample granularity under weights frozen from a
//! designated reference corpus. Frozen weights keep the reward stationary:
//! deriving them from each minibatch would let the policy move the goal.
//! The per-sample formulation is an extension beyond the corpus metric and
//! is documented as such.

use serde::{Deserialize, Serialize};

use crate::confusion::{align_corpora, AlignMode, ConfusionCounts};
use crate::crg::CrgWeights;
use crate::error::{Error, Result};
use crate::nlg::{bleu_scores, rouge_l, tokenize, NlgConfig, ReportPair};
use crate::schema::{LabelAssignment, LabelMatrix};

/// Floor of every reward; the corpus score's worst case.
pub const REWARD_FLOOR: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluencyMetric {
    Bleu4,
    RougeL,
    /// Pure label reward, no fluency term.
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Weights frozen from the reference corpus, not the minibatch.
    pub weights: CrgWeights,
    /// Share of the label reward in the blend; 1 means labels only.
    pub blend_lambda: f64,
    pub fluency_metric: FluencyMetric,
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.blend_lambda) || self.blend_lambda.is_nan() {
            return Err(Error::InvalidLambda(self.blend_lambda));
        }
        Ok(())
    }
}

/// Label-level reward for one sample in [0.2, 1.0].
///
/// With a = the sample's reference positives > 0, the sample's raw score
/// `s = tp*w_tp - fn*w_fn - fp*w_fp` is normalized by its own maximum
/// `a*w_tp` through the corpus formula shape, so a perfect sample scores
/// 1.0 and an all-negative prediction scores exactly 1/3. A sample with
/// a = 0 has no positives to normalize by; it scores 1.0 when the
/// prediction is also clean and is otherwise penalized per false positive
/// against one virtual positive's worth of headroom. Both branches clamp
/// to the floor so long samples cannot blow past the corpus range.
pub fn sample_reward(
    predicted: &LabelAssignment,
    reference: &LabelAssignment,
    config: &RewardConfig,
) -> Result<f64> {
    config.validate()?;
    if predicted.label_names() != reference.label_names() {
        return Err(Error::RewardSchemaMismatch);
    }
    let mut counts = ConfusionCounts::default();
    for (label, &ref_value) in &reference.values {
        let pred_value = predicted.values[label];
        match (ref_value, pred_value) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fn_ += 1,
            (false, true) => counts.fp += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(reward_from_counts(&counts, &config.weights))
}

fn reward_from_counts(counts: &ConfusionCounts, weights: &CrgWeights) -> f64 {
    let a = counts.positives();
    if a == 0 {
        if counts.fp == 0 {
            return 1.0;
        }
        let penalty = counts.fp as f64 * weights.w_fp / weights.w_tp;
        return (1.0 - penalty).max(REWARD_FLOOR);
    }
    let s = counts.tp as f64 * weights.w_tp
        - counts.fn_ as f64 * weights.w_fn
        - counts.fp as f64 * weights.w_fp;
    let s_max = a as f64 * weights.w_tp;
    (s_max / (2.0 * s_max - s)).clamp(REWARD_FLOOR, 1.0)
}

/// `lambda * label_reward + (1 - lambda) * fluency`.
pub fn blended_reward(sample_reward: f64, fluency_score: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(lambda * sample_reward + (1.0 - lambda) * fluency_score)
}

/// Per-sample fluency in [0, 1] for the blend: BLEU-4 or LCS overlap of
/// the single pair. `None` yields 0 and is never blended in by callers.
pub fn fluency_score(pair: &ReportPair, metric: FluencyMetric, nlg: &NlgConfig) -> Result<f64> {
    let cand = vec![tokenize(&pair.candidate)];
    let reference = vec![tokenize(&pair.reference)];
    match metric {
        FluencyMetric::Bleu4 => Ok(bleu_scores(&cand, &reference, 4, nlg.bleu_epsilon)?[3]),
        FluencyMetric::RougeL => rouge_l(&cand, &reference, nlg.rouge_beta),
        FluencyMetric::None => Ok(0.0),
    }
}

/// One sample's reward record, ready for line-delimited emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRewardRecord {
    pub sample_id: String,
    pub label_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fluency: Option<f64>,
    pub reward: f64,
}

/// Rewards every aligned sample; fluency pairs (when provided) must cover
/// each sample id being scored.
pub fn batch_rewards(
    predictions: &LabelMatrix,
    references: &LabelMatrix,
    config: &RewardConfig,
    fluency_pairs: Option<&[ReportPair]>,
    nlg: &NlgConfig,
) -> Result<Vec<SampleRewardRecord>> {
    config.validate()?;
    let paired = align_corpora(predictions, references, AlignMode::Strict)?;
    let mut records = Vec::with_capacity(paired.rows.len());
    for row in &paired.rows {
        let label_reward = sample_reward(&row.prediction, &row.reference, config)?;
        let (fluency, reward) = match (config.fluency_metric, fluency_pairs) {
            (FluencyMetric::None, _) | (_, None) => (None, label_reward),
            (metric, Some(pairs)) => {
                let pair = pairs
                    .iter()
                    .find(|p| p.sample_id == row.sample_id)
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("no report pair for sample {}", row.sample_id))
                    })?;
                let f = fluency_score(pair, metric, nlg)?;
                (
                    Some(f),
                    blended_reward(label_reward, f, config.blend_lambda)?,
                )
            }
        };
        records.push(SampleRewardRecord {
            sample_id: row.sample_id.clone(),
            label_reward,
            fluency,
            reward,
        });
    }
    Ok(records)
}

/// Minibatch-level score under frozen weights: the batch's own A sets the
/// normalizer, the weights stay the reference corpus's, and the result is
/// clamped to the reward range. Batches with no reference positives are
/// refused; callers should fall back to the per-sample path there.
pub fn batch_crg_frozen(
    predictions: &LabelMatrix,
    references: &LabelMatrix,
    weights: &CrgWeights,
) -> Result<f64> {
    let paired = align_corpora(predictions, references, AlignMode::Strict)?;
    let mut counts = ConfusionCounts::default();
    for row in &paired.rows {
        for (label, &ref_value) in &row.reference.values {
            let pred_value = row.prediction.values[label];
            counts.add(&match (ref_value, pred_value) {
                (true, true) => ConfusionCounts::new(1, 0, 0, 0),
                (true, false) => ConfusionCounts::new(0, 1, 0, 0),
                (false, true) => ConfusionCounts::new(0, 0, 1, 0),
                (false, false) => ConfusionCounts::new(0, 0, 0, 1),
            });
        }
    }
    if counts.positives() == 0 {
        return Err(Error::DegenerateNoPositives);
    }
    Ok(reward_from_counts(&counts, weights))
}
