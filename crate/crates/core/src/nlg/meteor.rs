//! METEOR: unigram alignment with exact and stemmed matching stages, an
//! alpha-weighted harmonic mean, and a fragmentation penalty.

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    /// Recall weight in the harmonic mean.
    pub alpha: f64,
    /// Fragmentation exponent.
    pub beta: f64,
    /// Maximum fragmentation penalty.
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Mean METEOR score over positionally paired token lists.
pub fn meteor(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    params: MeteorParams,
) -> Result<f64> {
    if candidates.is_empty() || candidates.len() != references.len() {
        return Err(Error::EmptyCorpus);
    }
    let stemmer = Stemmer::create(Algorithm::English);
    let total: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| pair_score(c, r, params, &stemmer))
        .sum();
    Ok(total / candidates.len() as f64)
}

fn pair_score(
    cand: &[String],
    reference: &[String],
    params: MeteorParams,
    stemmer: &Stemmer,
) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let alignment = align(cand, reference, stemmer);
    let m = alignment.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let precision = m / cand.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let chunks = count_chunks(&alignment) as f64;
    // (chunks - 1) / (m - 1) is 0 for a single contiguous run and 1 at
    // full fragmentation, so an identical pair takes no penalty at all.
    let frag = (chunks - 1.0) / (m - 1.0).max(1.0);
    let penalty = params.gamma * frag.powf(params.beta);
    fmean * (1.0 - penalty)
}

/// Greedy two-stage alignment: exact matches first, then stem matches over
/// whatever is left. Both stages walk the candidate left to right and take
/// the first unused reference position, so the result is deterministic.
fn align(cand: &[String], reference: &[String], stemmer: &Stemmer) -> Vec<(usize, usize)> {
    let mut cand_used = vec![false; cand.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut pairs = Vec::new();

    for (i, c) in cand.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            if !ref_used[j] && c == r {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }

    let cand_stems: Vec<String> = cand.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let ref_stems: Vec<String> = reference
        .iter()
        .map(|t| stemmer.stem(t).into_owned())
        .collect();
    for (i, c) in cand_stems.iter().enumerate() {
        if cand_used[i] {
            continue;
        }
        for (j, r) in ref_stems.iter().enumerate() {
            if !ref_used[j] && c == r {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }

    pairs.sort_unstable();
    pairs
}

/// Number of maximal runs where candidate and reference positions both
/// advance by exactly one. Pairs must be sorted by candidate position.
fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    let mut chunks = 1;
    for w in pairs.windows(2) {
        let (ci, ri) = w[0];
        let (cj, rj) = w[1];
        if cj != ci + 1 || rj != ri + 1 {
            chunks += 1;
        }
    }
    chunks
}
