//! Distribution-aware evaluation for clinical report generation.
//!
//! The core metric scores binary finding labels against a reference corpus
//! with weights derived from the reference label distribution, so that
//! trivial all-normal or all-abnormal predictors land on a known fixed
//! point (1/3) instead of the inflated accuracy class imbalance produces.
//! Around it sit the baseline classification metrics, corpus surface
//! metrics (BLEU, ROUGE-L, METEOR, CIDEr), two report labelers (rule-based
//! and LLM-backed), a reinforcement-learning reward, prevalence
//! simulations, and the file formats plus pipeline the `crg` CLI exposes.

pub mod classical;
pub mod confusion;
pub mod crg;
pub mod error;
pub mod io;
pub mod labeler;
pub mod nlg;
pub mod pipeline;
pub mod report;
pub mod reward;
pub mod schema;
pub mod simulate;

pub use classical::{
    macro_metrics, micro_metrics, Averaging, ClassicalMetrics, ZeroDivisionPolicy,
};
pub use confusion::{
    align_corpora, confusion_from_labels, confusion_from_labels_masked, AlignMode,
    ConfusionBreakdown, ConfusionCounts, PairedMatrix,
};
pub use crg::{
    crg_from_counts, crg_from_labels, crg_hierarchical, crg_hierarchical_from_counts,
    derive_weights, raw_score, CrgResult, CrgWeights, HierarchicalCrgResult,
};
pub use error::{Error, Result};
pub use nlg::{score_all, NlgConfig, NlgScores, ReportPair};
pub use pipeline::{pair_reports, run_score, run_simulate, ScoreRequest};
pub use report::{EvaluationReport, RunMetadata};
pub use reward::{
    batch_crg_frozen, batch_rewards, blended_reward, fluency_score, sample_reward, FluencyMetric,
    RewardConfig, SampleRewardRecord,
};
pub use schema::{LabelAssignment, LabelDef, LabelMatrix, LabelSchema};
pub use simulate::{run_simulation, Predictor, SimulationRow, SimulationSpec};
