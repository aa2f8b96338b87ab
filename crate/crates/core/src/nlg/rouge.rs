//! ROUGE-L: longest-common-subsequence F-measure per pair, averaged over
//! the corpus. Recall is weighted by beta^2 in the usual F formulation.

use crate::error::{Error, Result};

/// Mean ROUGE-L F-score over positionally paired token lists.
///
/// Per pair: P = LCS/|cand|, R = LCS/|ref|,
/// F = (1 + beta^2) * P * R / (R + beta^2 * P). A pair where either side
/// is empty contributes 0.
pub fn rouge_l(candidates: &[Vec<String>], references: &[Vec<String>], beta: f64) -> Result<f64> {
    if candidates.is_empty() || candidates.len() != references.len() {
        return Err(Error::EmptyCorpus);
    }
    let total: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| pair_score(c, r, beta))
        .sum();
    Ok(total / candidates.len() as f64)
}

fn pair_score(cand: &[String], reference: &[String], beta: f64) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(cand, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / cand.len() as f64;
    let r = lcs / reference.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Classic O(|a|*|b|) dynamic program with a rolling row.
fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
