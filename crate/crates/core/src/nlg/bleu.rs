//! Corpus-level BLEU: clipped modified n-gram precision, geometric mean,
//! and the brevity penalty `e^(1 - r/c)` applied when candidates run short.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::nlg::tokenize::ngrams;

/// Corpus BLEU-n for each n in `1..=max_n`.
///
/// Candidate and reference token lists are paired by position. Precisions
/// are pooled over the corpus before the geometric mean. A zero precision
/// at any order makes that order's score (and all higher orders') zero;
/// passing `epsilon` instead floors pooled precisions at that value, which
/// keeps scores nonzero on short corpora. An order where the candidates
/// contain no n-grams at all is vacuously perfect (there was nothing to
/// get wrong), so identical short corpora still score 1 at every order;
/// the brevity penalty already handles genuinely short candidates.
pub fn bleu_scores(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    max_n: usize,
    epsilon: Option<f64>,
) -> Result<Vec<f64>> {
    if candidates.is_empty() || candidates.len() != references.len() {
        return Err(Error::EmptyCorpus);
    }
    if max_n == 0 {
        return Err(Error::InvalidInput("BLEU order must be at least 1".into()));
    }

    let mut matched = vec![0u64; max_n];
    let mut total = vec![0u64; max_n];
    let mut cand_len = 0u64;
    let mut ref_len = 0u64;
    for (cand, reference) in candidates.iter().zip(references) {
        cand_len += cand.len() as u64;
        ref_len += reference.len() as u64;
        for n in 1..=max_n {
            let cand_grams = count_ngrams(cand, n);
            let ref_grams = count_ngrams(reference, n);
            for (gram, count) in &cand_grams {
                let clip = ref_grams.get(gram).copied().unwrap_or(0);
                matched[n - 1] += (*count).min(clip);
                total[n - 1] += count;
            }
        }
    }

    let bp = if cand_len == 0 {
        0.0
    } else if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };

    let mut scores = Vec::with_capacity(max_n);
    let mut log_sum = 0.0;
    let mut dead = false;
    for n in 1..=max_n {
        let p = if total[n - 1] == 0 {
            1.0
        } else {
            matched[n - 1] as f64 / total[n - 1] as f64
        };
        let p = match epsilon {
            Some(eps) if p < eps => eps,
            _ => p,
        };
        if p == 0.0 {
            dead = true;
        }
        if !dead {
            log_sum += p.ln();
            scores.push(bp * (log_sum / n as f64).exp());
        } else {
            scores.push(0.0);
        }
    }
    Ok(scores)
}

fn count_ngrams(tokens: &[String], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    for gram in ngrams(tokens, n) {
        let key: Vec<&str> = gram.iter().map(String::as_str).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}
