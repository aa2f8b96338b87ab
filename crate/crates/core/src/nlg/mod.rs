//! Surface-overlap metrics over candidate/reference report pairs.
//!
//! These measure fluency and wording overlap, not clinical correctness;
//! they sit alongside the label-based scores for comparison.

pub mod bleu;
pub mod cider;
pub mod meteor;
pub mod rouge;
pub mod tokenize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use bleu::bleu_scores;
pub use cider::{cider, CiderScore};
pub use meteor::{meteor, MeteorParams};
pub use rouge::rouge_l;
pub use tokenize::{tokenize, TOKENIZER_VERSION};

/// One candidate report with its reference.
///
/// The pairing is single-reference by construction; corpora with several
/// references per sample are rejected up front rather than silently using
/// the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportPair {
    pub sample_id: String,
    pub candidate: String,
    pub reference: String,
}

impl ReportPair {
    /// Builds a pair from a candidate and its reference list, refusing
    /// anything but exactly one reference.
    pub fn from_references(
        sample_id: &str,
        candidate: &str,
        references: &[String],
    ) -> Result<Self> {
        match references {
            [reference] => Ok(ReportPair {
                sample_id: sample_id.to_string(),
                candidate: candidate.to_string(),
                reference: reference.clone(),
            }),
            _ => Err(Error::MultiReference {
                sample_id: sample_id.to_string(),
                count: references.len(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlgConfig {
    pub rouge_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
    pub cider_sigma: f64,
    /// Optional floor for pooled BLEU precisions; `None` lets a zero
    /// precision zero out its order, the conventional corpus behavior.
    pub bleu_epsilon: Option<f64>,
}

impl Default for NlgConfig {
    fn default() -> Self {
        NlgConfig {
            rouge_beta: 1.2,
            meteor_alpha: 0.9,
            meteor_beta: 3.0,
            meteor_gamma: 0.5,
            cider_sigma: 6.0,
            bleu_epsilon: None,
        }
    }
}

/// All surface metrics for one corpus run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlgScores {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cider: f64,
}

/// Scores every metric over the paired corpus with one shared tokenization
/// pass. Returns the scores plus any degeneracy warnings.
pub fn score_all(pairs: &[ReportPair], config: &NlgConfig) -> Result<(NlgScores, Vec<String>)> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let candidates: Vec<Vec<String>> = pairs.iter().map(|p| tokenize(&p.candidate)).collect();
    let references: Vec<Vec<String>> = pairs.iter().map(|p| tokenize(&p.reference)).collect();

    let bleu = bleu_scores(&candidates, &references, 4, config.bleu_epsilon)?;
    let rouge = rouge_l(&candidates, &references, config.rouge_beta)?;
    let meteor_score = meteor(
        &candidates,
        &references,
        MeteorParams {
            alpha: config.meteor_alpha,
            beta: config.meteor_beta,
            gamma: config.meteor_gamma,
        },
    )?;
    let cider_result = cider(&candidates, &references, config.cider_sigma)?;

    let mut warnings = Vec::new();
    if cider_result.smoothed_degenerate_idf {
        warnings.push(
            "cider: single-reference corpus; idf computed over a virtual corpus of size 2"
                .to_string(),
        );
    }
    if let Some(empty) = pairs
        .iter()
        .zip(&candidates)
        .find(|(_, toks)| toks.is_empty())
    {
        warnings.push(format!(
            "empty candidate after tokenization: sample {}",
            empty.0.sample_id
        ));
    }

    Ok((
        NlgScores {
            bleu1: bleu[0],
            bleu2: bleu[1],
            bleu3: bleu[2],
            bleu4: bleu[3],
            rouge_l: rouge,
            meteor: meteor_score,
            cider: cider_result.score,
        },
        warnings,
    ))
}
