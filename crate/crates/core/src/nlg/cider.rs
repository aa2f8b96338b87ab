//! CIDEr-D: consensus n-gram similarity with tf-idf weighting, candidate
//! count clipping, and a Gaussian length penalty, scaled to [0, 10].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nlg::tokenize::ngrams;

const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiderScore {
    pub score: f64,
    /// True when the reference corpus was a single document, forcing the
    /// idf table onto a virtual corpus of size two so weights stay nonzero.
    pub smoothed_degenerate_idf: bool,
}

/// Corpus CIDEr-D over positionally paired token lists.
///
/// Document frequencies come from the reference side only. Per pair and
/// order n, candidate tf-idf counts are clipped to the reference's before
/// the cosine, and every order's similarity is damped by
/// `exp(-(len_c - len_r)^2 / (2 sigma^2))`. Orders average equally and the
/// result is scaled by 10.
pub fn cider(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    sigma: f64,
) -> Result<CiderScore> {
    if candidates.is_empty() || candidates.len() != references.len() {
        return Err(Error::EmptyCorpus);
    }

    // df[n][gram] = number of reference documents containing gram. Ordered
    // maps throughout: float sums must happen in one fixed order so a score
    // is byte-for-byte reproducible across processes.
    let mut df: Vec<BTreeMap<Vec<String>, u64>> = vec![BTreeMap::new(); MAX_ORDER];
    for reference in references {
        for (n, table) in df.iter_mut().enumerate() {
            for gram in counts(reference, n + 1).into_keys() {
                *table.entry(gram).or_insert(0) += 1;
            }
        }
    }
    let smoothed = references.len() == 1;
    // log(N) with N floored at 2: a one-document corpus would zero every
    // idf weight and make even an identical pair score 0.
    let log_n = ((references.len().max(2)) as f64).ln();

    let idf = |n: usize, gram: &Vec<String>| -> f64 {
        let d = df[n - 1].get(gram).copied().unwrap_or(0).max(1);
        log_n - (d as f64).ln()
    };

    let mut total = 0.0;
    for (cand, reference) in candidates.iter().zip(references) {
        let delta = cand.len() as f64 - reference.len() as f64;
        let length_penalty = (-delta * delta / (2.0 * sigma * sigma)).exp();
        let mut pair = 0.0;
        for n in 1..=MAX_ORDER {
            let cand_vec = weighted(cand, n, &idf);
            let ref_vec = weighted(reference, n, &idf);
            pair += length_penalty * clipped_cosine(&cand_vec, &ref_vec);
        }
        total += pair / MAX_ORDER as f64;
    }
    Ok(CiderScore {
        score: 10.0 * total / candidates.len() as f64,
        smoothed_degenerate_idf: smoothed,
    })
}

fn counts(tokens: &[String], n: usize) -> BTreeMap<Vec<String>, u64> {
    let mut out = BTreeMap::new();
    for gram in ngrams(tokens, n) {
        *out.entry(gram.to_vec()).or_insert(0) += 1;
    }
    out
}

fn weighted(
    tokens: &[String],
    n: usize,
    idf: &impl Fn(usize, &Vec<String>) -> f64,
) -> BTreeMap<Vec<String>, f64> {
    counts(tokens, n)
        .into_iter()
        .map(|(gram, c)| {
            let w = c as f64 * idf(n, &gram);
            (gram, w)
        })
        .collect()
}

/// Cosine similarity with candidate components clipped to the reference's.
/// When neither side has any n-gram of this order (both documents shorter
/// than n), the order is vacuously perfect and scores 1 so an identical
/// pair of short reports still reaches the scale maximum; a one-sided void
/// scores 0.
fn clipped_cosine(
    cand: &BTreeMap<Vec<String>, f64>,
    reference: &BTreeMap<Vec<String>, f64>,
) -> f64 {
    if cand.is_empty() && reference.is_empty() {
        return 1.0;
    }
    let norm = |v: &BTreeMap<Vec<String>, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let cand_norm = norm(cand);
    let ref_norm = norm(reference);
    if cand_norm == 0.0 || ref_norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = cand
        .iter()
        .filter_map(|(gram, &c)| reference.get(gram).map(|&r| c.min(r) * r))
        .sum();
    dot / (cand_norm * ref_norm)
}
