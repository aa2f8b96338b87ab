//! The CRG score: distribution-derived weights, raw and normalized scores,
//! and the hierarchical multi-level extension.
//!
//! Weights are fixed by two requirements on the reference label
//! distribution (T total cells, A reference-positive cells):
//!
//! * the all-negative and all-positive trivial predictors must tie, which
//!   forces `(w_tp + w_fn) / w_fp = (T - A) / A`;
//! * the reward for a true positive equals the penalty for a false
//!   negative, which pins `w_tp = w_fn = (T - A) / (2A)` with `w_fp = 1`.
//!
//! The raw score `s = TP*w_tp - FN*w_fn - FP*w_fp` is normalized as
//! `score = s_max / (2*s_max - s)` with `s_max = A*w_tp = (T - A)/2`,
//! which maps both trivial predictors to exactly 1/3, a perfect report to
//! 1.0, and the worst case (every cell wrong) to 0.2.
//!
//! All score arithmetic is carried as an exact integer ratio and only
//! projected to `f64` at the end, so the 1/3 and 0.2 fixed points hold
//! bit-exactly at realistic corpus sizes.

use serde::{Deserialize, Serialize};

use crate::confusion::{align_corpora, confusion_from_labels, AlignMode, ConfusionCounts};
use crate::error::{Error, Result};
use crate::schema::LabelMatrix;

/// Largest supported T; keeps the i128 ratio arithmetic overflow-free.
pub const MAX_TOTAL_CELLS: u64 = 1 << 62;

/// Distribution-derived scoring weights for one reference corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrgWeights {
    pub w_tp: f64,
    pub w_fn: f64,
    /// Always 1; kept explicit so serialized weights are self-describing.
    pub w_fp: f64,
    /// Total number of (sample, label) cells the weights were derived from.
    pub t_total: u64,
    /// Number of reference-positive cells.
    pub a_positive: u64,
    /// Maximum achievable raw score, `a_positive * w_tp`.
    pub s_max: f64,
    /// Exact numerator of w_tp (= T - A).
    pub ratio_num: u64,
    /// Exact denominator of w_tp (= 2A).
    pub ratio_den: u64,
}

impl CrgWeights {
    /// w_tp as an exact integer ratio `(T - A, 2A)`.
    pub fn ratio(&self) -> (u64, u64) {
        (self.ratio_num, self.ratio_den)
    }

    /// Checks the trivial-predictor balance identity
    /// `(w_tp + w_fn) / w_fp = (T - A) / A` to the given relative error.
    pub fn satisfies_balance_identity(&self, rel_tol: f64) -> bool {
        let lhs = (self.w_tp + self.w_fn) / self.w_fp;
        let rhs = (self.t_total - self.a_positive) as f64 / self.a_positive as f64;
        (lhs - rhs).abs() <= rel_tol * rhs.abs()
    }
}

/// Derives the weight triple from a reference distribution.
///
/// Requires `0 < a < t`: a corpus with no positive or no negative reference
/// labels has no meaningful weight balance and is refused.
pub fn derive_weights(t: u64, a: u64) -> Result<CrgWeights> {
    if t == 0 || a > t {
        return Err(Error::InvalidDistribution(format!(
            "need 0 < A <= T, got T={t}, A={a}"
        )));
    }
    if t > MAX_TOTAL_CELLS {
        return Err(Error::InvalidDistribution(format!(
            "T={t} exceeds the supported maximum {MAX_TOTAL_CELLS}"
        )));
    }
    if a == 0 {
        return Err(Error::DegenerateNoPositives);
    }
    if a == t {
        return Err(Error::DegenerateNoNegatives);
    }
    let num = t - a;
    let den = 2 * a;
    let w = num as f64 / den as f64;
    Ok(CrgWeights {
        w_tp: w,
        w_fn: w,
        w_fp: 1.0,
        t_total: t,
        a_positive: a,
        s_max: num as f64 / 2.0,
        ratio_num: num,
        ratio_den: den,
    })
}

/// The normalized score together with everything needed to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrgResult {
    /// Normalized score in [0.2, 1.0].
    pub score: f64,
    /// Raw weighted score `s`.
    pub raw_score: f64,
    pub weights: CrgWeights,
    pub counts: ConfusionCounts,
    #[serde(skip)]
    score_num: i128,
    #[serde(skip)]
    score_den: i128,
}

impl CrgResult {
    /// The score as an exact integer ratio (numerator, denominator).
    pub fn score_ratio(&self) -> (i128, i128) {
        (self.score_num, self.score_den)
    }
}

/// Raw weighted score `s = TP*w_tp - FN*w_fn - FP*w_fp`.
///
/// The counts must describe the same corpus the weights were derived from
/// (`tp + fn = A` and `tp + fn + fp + tn = T`); anything else would mix one
/// corpus's distribution with another's outcomes.
pub fn raw_score(counts: &ConfusionCounts, weights: &CrgWeights) -> Result<f64> {
    check_consistency(counts, weights)?;
    let (num, den) = raw_score_ratio(counts, weights);
    Ok(num as f64 / den as f64)
}

/// `s` as an exact ratio over 2A: ((tp - fn)(T - A) - fp * 2A, 2A).
fn raw_score_ratio(counts: &ConfusionCounts, weights: &CrgWeights) -> (i128, i128) {
    let tp = counts.tp as i128;
    let fn_ = counts.fn_ as i128;
    let fp = counts.fp as i128;
    let num = weights.ratio_num as i128;
    let den = weights.ratio_den as i128;
    ((tp - fn_) * num - fp * den, den)
}

fn check_consistency(counts: &ConfusionCounts, weights: &CrgWeights) -> Result<()> {
    if counts.positives() != weights.a_positive || counts.total() != weights.t_total {
        return Err(Error::CountWeightMismatch {
            counts_t: counts.total(),
            counts_a: counts.positives(),
            weights_t: weights.t_total,
            weights_a: weights.a_positive,
        });
    }
    Ok(())
}

/// Normalized score from confusion counts alone.
///
/// T and A are derived from the counts themselves, so the counts must
/// contain at least one reference-positive and one reference-negative cell.
pub fn crg_from_counts(counts: &ConfusionCounts) -> Result<CrgResult> {
    let t = counts.total();
    let a = counts.positives();
    let weights = derive_weights(t, a)?;

    // score = s_max / (2*s_max - s); multiplying through by 2A gives
    // A(T-A) / (2A(T-A) - (tp - fn)(T-A) + 2A*fp), all in integers.
    let a_i = a as i128;
    let num_w = weights.ratio_num as i128; // T - A
    let den_w = weights.ratio_den as i128; // 2A
    let tp = counts.tp as i128;
    let fn_ = counts.fn_ as i128;
    let fp = counts.fp as i128;

    let score_num = a_i * num_w;
    let score_den = 2 * a_i * num_w - (tp - fn_) * num_w + den_w * fp;
    debug_assert!(score_den > 0);

    let (s_num, s_den) = raw_score_ratio(counts, &weights);
    Ok(CrgResult {
        score: score_num as f64 / score_den as f64,
        raw_score: s_num as f64 / s_den as f64,
        weights,
        counts: *counts,
        score_num,
        score_den,
    })
}

/// Normalized score straight from label matrices: align, aggregate, score.
pub fn crg_from_labels(
    predictions: &LabelMatrix,
    references: &LabelMatrix,
    mode: AlignMode,
) -> Result<CrgResult> {
    let paired = align_corpora(predictions, references, mode)?;
    let breakdown = confusion_from_labels(&paired)?;
    crg_from_counts(&breakdown.aggregate)
}

/// Per-level scores plus their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalCrgResult {
    /// 1-based schema level of each entry in `per_level`.
    pub levels: Vec<usize>,
    pub per_level: Vec<CrgResult>,
    /// Arithmetic mean of the per-level scores.
    #[serde(rename = "final")]
    pub final_score: f64,
}

impl HierarchicalCrgResult {
    /// Assembles the hierarchical result from already-computed level scores.
    pub fn from_level_results(levels: Vec<usize>, per_level: Vec<CrgResult>) -> Result<Self> {
        if per_level.is_empty() || levels.len() != per_level.len() {
            return Err(Error::InvalidInput(
                "hierarchical result needs one level id per score".to_string(),
            ));
        }
        let final_score = per_level.iter().map(|r| r.score).sum::<f64>() / per_level.len() as f64;
        Ok(HierarchicalCrgResult {
            levels,
            per_level,
            final_score,
        })
    }
}

/// Scores each level independently with its own T and A, then averages.
///
/// Every level must be scorable; a degenerate level fails the whole call
/// with the offending schema level named, rather than being skipped.
pub fn crg_hierarchical(
    level_inputs: &[(LabelMatrix, LabelMatrix)],
    mode: AlignMode,
) -> Result<HierarchicalCrgResult> {
    if level_inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut levels = Vec::with_capacity(level_inputs.len());
    let mut per_level = Vec::with_capacity(level_inputs.len());
    for (predictions, references) in level_inputs {
        let level = references.schema_level();
        let result = crg_from_labels(predictions, references, mode).map_err(|source| {
            Error::LevelFailed {
                level,
                source: Box::new(source),
            }
        })?;
        levels.push(level);
        per_level.push(result);
    }
    HierarchicalCrgResult::from_level_results(levels, per_level)
}

/// Hierarchical scoring from per-level counts, for counts-file audits.
pub fn crg_hierarchical_from_counts(
    level_counts: &[(usize, ConfusionCounts)],
) -> Result<HierarchicalCrgResult> {
    if level_counts.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut levels = Vec::with_capacity(level_counts.len());
    let mut per_level = Vec::with_capacity(level_counts.len());
    for (level, counts) in level_counts {
        let result = crg_from_counts(counts).map_err(|source| Error::LevelFailed {
            level: *level,
            source: Box::new(source),
        })?;
        levels.push(*level);
        per_level.push(result);
    }
    HierarchicalCrgResult::from_level_results(levels, per_level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_from_published_distribution() {
        // T and A as summed from the published model rows.
        let w = derive_weights(54702, 10535).unwrap();
        assert_eq!(w.ratio(), (44167, 21070));
        assert_eq!(w.w_tp, 44167.0 / 21070.0);
        assert!((w.w_tp - 2.096203).abs() < 1e-6);
        assert_eq!(w.w_tp, w.w_fn);
        assert_eq!(w.w_fp, 1.0);
        assert_eq!(w.s_max, 22083.5);
        assert!(w.satisfies_balance_identity(1e-9));
    }

    #[test]
    fn balanced_set_halves_the_weight() {
        let w = derive_weights(20, 10).unwrap();
        assert_eq!(w.w_tp, 0.5);
        assert_eq!(w.w_fn, 0.5);
        assert_eq!(w.w_fp, 1.0);
    }

    #[test]
    fn small_distribution_by_substitution() {
        let w = derive_weights(10, 1).unwrap();
        assert_eq!(w.w_tp, 4.5);
        assert_eq!(w.s_max, 4.5);
    }

    #[test]
    fn degenerate_distributions_are_refused() {
        assert!(matches!(
            derive_weights(10, 0),
            Err(Error::DegenerateNoPositives)
        ));
        assert!(matches!(
            derive_weights(10, 10),
            Err(Error::DegenerateNoNegatives)
        ));
        assert!(matches!(
            derive_weights(10, 11),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            derive_weights(0, 0),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn raw_score_extremes() {
        let t = 100;
        let a = 20;
        let w = derive_weights(t, a).unwrap();
        // Perfect report: s = s_max.
        let perfect = ConfusionCounts::new(a, 0, 0, t - a);
        assert_eq!(raw_score(&perfect, &w).unwrap(), w.s_max);
        // Empty report: s = -A * w_fn = -s_max.
        let empty = ConfusionCounts::new(0, a, 0, t - a);
        assert_eq!(raw_score(&empty, &w).unwrap(), -w.s_max);
        // Exhaustive report: s = A*w_tp - (T - A) = -s_max.
        let exhaustive = ConfusionCounts::new(a, 0, t - a, 0);
        assert_eq!(raw_score(&exhaustive, &w).unwrap(), -w.s_max);
    }

    #[test]
    fn raw_score_rejects_foreign_counts() {
        let w = derive_weights(100, 20).unwrap();
        let counts = ConfusionCounts::new(5, 10, 3, 40);
        assert!(matches!(
            raw_score(&counts, &w),
            Err(Error::CountWeightMismatch { .. })
        ));
    }

    #[test]
    fn published_model_rows_reproduce() {
        let cases = [
            (ConfusionCounts::new(550, 9985, 1766, 42401), 0.335),
            (ConfusionCounts::new(1561, 8974, 1804, 42363), 0.359),
            (ConfusionCounts::new(2224, 8311, 3081, 41086), 0.368),
            (ConfusionCounts::new(1504, 9031, 2694, 41473), 0.352),
        ];
        for (counts, published) in cases {
            let result = crg_from_counts(&counts).unwrap();
            assert!(
                (result.score - published).abs() <= 0.002,
                "score {} vs published {published}",
                result.score
            );
        }
    }

    #[test]
    fn trivial_predictors_score_exactly_one_third() {
        for (t, a) in [(10u64, 3u64), (54702, 10535), (1000, 1), (1000, 999)] {
            let all_negative = ConfusionCounts::new(0, a, 0, t - a);
            let r = crg_from_counts(&all_negative).unwrap();
            assert_eq!(r.score, 1.0 / 3.0, "all-negative at T={t}, A={a}");
            let (num, den) = r.score_ratio();
            assert_eq!(den, 3 * num);

            let all_positive = ConfusionCounts::new(a, 0, t - a, 0);
            let r = crg_from_counts(&all_positive).unwrap();
            assert_eq!(r.score, 1.0 / 3.0, "all-positive at T={t}, A={a}");
        }
    }

    #[test]
    fn perfect_and_worst_cases_hit_the_range_ends() {
        for (t, a) in [(6u64, 2u64), (54702, 10535)] {
            let perfect = ConfusionCounts::new(a, 0, 0, t - a);
            assert_eq!(crg_from_counts(&perfect).unwrap().score, 1.0);
            // Every cell wrong: s = -A*w_fn - (T-A)*w_fp = -3*s_max.
            let worst = ConfusionCounts::new(0, a, t - a, 0);
            assert_eq!(crg_from_counts(&worst).unwrap().score, 0.2);
        }
    }

    #[test]
    fn counts_without_negatives_are_degenerate() {
        let counts = ConfusionCounts::new(3, 1, 0, 0);
        assert!(matches!(
            crg_from_counts(&counts),
            Err(Error::DegenerateNoNegatives)
        ));
    }

    #[test]
    fn hierarchical_mean_of_two_levels() {
        // Level 1 scores exactly 1/3 (all-negative), level 2 exactly 1.0.
        let third = crg_from_counts(&ConfusionCounts::new(0, 4, 0, 12)).unwrap();
        let one = crg_from_counts(&ConfusionCounts::new(4, 0, 0, 12)).unwrap();
        let result =
            HierarchicalCrgResult::from_level_results(vec![1, 2], vec![third, one]).unwrap();
        assert!((result.final_score - (1.0 / 3.0 + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn hierarchical_from_counts_names_failing_level() {
        let good = ConfusionCounts::new(1, 1, 1, 1);
        let degenerate = ConfusionCounts::new(0, 0, 2, 2);
        let err = crg_hierarchical_from_counts(&[(1, good), (2, degenerate)]).unwrap_err();
        match err {
            Error::LevelFailed { level, .. } => assert_eq!(level, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn score_scale_invariance() {
        let base = ConfusionCounts::new(7, 3, 5, 25);
        let scaled = ConfusionCounts::new(70, 30, 50, 250);
        let a = crg_from_counts(&base).unwrap();
        let b = crg_from_counts(&scaled).unwrap();
        assert!((a.score - b.score).abs() < 1e-15);
    }
}
