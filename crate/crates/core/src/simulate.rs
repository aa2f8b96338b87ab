//! Seeded prevalence simulations: generate a random reference matrix,
//! apply a synthetic predictor, and score it every way at once. This is
//! the numerical form of the imbalance argument: at low prevalence a
//! predictor that says "normal" to everything posts high accuracy while
//! its normalized score pins to the trivial 1/3.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::micro_metrics;
use crate::confusion::ConfusionCounts;
use crate::crg::{crg_from_counts, MAX_TOTAL_CELLS};
use crate::error::{Error, Result};

/// Recorded next to every simulation so runs reproduce across platforms.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    /// Labels every cell negative (the "empty report" model).
    AlwaysNegative,
    /// Labels every cell positive (the "exhaustive report" model).
    AlwaysPositive,
    /// Flips each cell independently: positive with probability
    /// `sensitivity` on reference-positive cells, `1 - specificity` on
    /// reference-negative ones.
    Noisy { sensitivity: f64, specificity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_samples: u64,
    pub n_labels: u64,
    /// Probability a reference cell is positive; strictly inside (0, 1).
    pub prevalence: f64,
    pub predictor: Predictor,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_labels == 0 {
            return Err(Error::InvalidSimulationSpec(
                "n_samples and n_labels must be at least 1".to_string(),
            ));
        }
        let cells = self.n_samples.checked_mul(self.n_labels);
        if cells.is_none() || cells.unwrap() > MAX_TOTAL_CELLS {
            return Err(Error::InvalidSimulationSpec(format!(
                "n_samples * n_labels exceeds the supported maximum {MAX_TOTAL_CELLS}"
            )));
        }
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::InvalidSimulationSpec(format!(
                "prevalence must lie strictly inside (0, 1), got {}",
                self.prevalence
            )));
        }
        if let Predictor::Noisy {
            sensitivity,
            specificity,
        } = self.predictor
        {
            for (name, v) in [("sensitivity", sensitivity), ("specificity", specificity)] {
                if !(0.0..=1.0).contains(&v) || v.is_nan() {
                    return Err(Error::InvalidSimulationSpec(format!(
                        "{name} must lie in [0, 1], got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One simulated configuration, scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub spec: SimulationSpec,
    pub rng_algorithm: String,
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub crg: f64,
}

/// Draws the reference matrix and predictions cell by cell in a fixed
/// row-major order (reference bit first, then the predictor's, when it
/// needs randomness), so a seed pins the entire run.
pub fn run_simulation(spec: &SimulationSpec) -> Result<SimulationRow> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut counts = ConfusionCounts::default();
    for _ in 0..spec.n_samples {
        for _ in 0..spec.n_labels {
            let reference = rng.random_bool(spec.prevalence);
            let prediction = match spec.predictor {
                Predictor::AlwaysNegative => false,
                Predictor::AlwaysPositive => true,
                Predictor::Noisy {
                    sensitivity,
                    specificity,
                } => {
                    if reference {
                        rng.random_bool(sensitivity)
                    } else {
                        rng.random_bool(1.0 - specificity)
                    }
                }
            };
            match (reference, prediction) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fn_ += 1,
                (false, true) => counts.fp += 1,
                (false, false) => counts.tn += 1,
            }
        }
    }
    let metrics = micro_metrics(&counts)?;
    let crg = crg_from_counts(&counts)?;
    Ok(SimulationRow {
        spec: *spec,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        counts,
        accuracy: metrics.accuracy,
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        crg: crg.score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(predictor: Predictor) -> SimulationSpec {
        SimulationSpec {
            n_samples: 2000,
            n_labels: 18,
            prevalence: 0.193,
            predictor,
            seed: 7,
        }
    }

    #[test]
    fn always_negative_matches_the_imbalance_story() {
        let row = run_simulation(&spec(Predictor::AlwaysNegative)).unwrap();
        let cells = (row.spec.n_samples * row.spec.n_labels) as f64;
        let p = 0.193;
        let sigma = (p * (1.0 - p) / cells).sqrt();
        assert!(
            (row.accuracy - (1.0 - p)).abs() <= 3.0 * sigma,
            "accuracy {} vs expected {} (sigma {})",
            row.accuracy,
            1.0 - p,
            sigma
        );
        assert_eq!(row.crg, 1.0 / 3.0);
        assert_eq!(row.recall, 0.0);
        assert_eq!(row.counts.tp + row.counts.fp, 0);
    }

    #[test]
    fn always_positive_pins_recall_and_the_trivial_score() {
        let row = run_simulation(&spec(Predictor::AlwaysPositive)).unwrap();
        assert_eq!(row.recall, 1.0);
        assert_eq!(row.crg, 1.0 / 3.0);
        assert_eq!(row.counts.fn_ + row.counts.tn, 0);
    }

    #[test]
    fn perfect_noisy_predictor_is_perfect_everywhere() {
        let row = run_simulation(&spec(Predictor::Noisy {
            sensitivity: 1.0,
            specificity: 1.0,
        }))
        .unwrap();
        assert_eq!(row.accuracy, 1.0);
        assert_eq!(row.precision, 1.0);
        assert_eq!(row.recall, 1.0);
        assert_eq!(row.f1, 1.0);
        assert_eq!(row.crg, 1.0);
    }

    #[test]
    fn same_seed_same_row_different_seed_different_counts() {
        let s = spec(Predictor::Noisy {
            sensitivity: 0.8,
            specificity: 0.9,
        });
        let a = run_simulation(&s).unwrap();
        let b = run_simulation(&s).unwrap();
        assert_eq!(a, b);
        let mut other = s;
        other.seed = 8;
        let c = run_simulation(&other).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn noisy_predictor_tracks_its_operating_point() {
        let s = SimulationSpec {
            n_samples: 10_000,
            n_labels: 10,
            prevalence: 0.3,
            predictor: Predictor::Noisy {
                sensitivity: 0.9,
                specificity: 0.8,
            },
            seed: 11,
        };
        let row = run_simulation(&s).unwrap();
        let sens = row.counts.tp as f64 / (row.counts.tp + row.counts.fn_) as f64;
        let spec_rate = row.counts.tn as f64 / (row.counts.tn + row.counts.fp) as f64;
        assert!((sens - 0.9).abs() < 0.01, "sensitivity {sens}");
        assert!((spec_rate - 0.8).abs() < 0.01, "specificity {spec_rate}");
    }

    #[test]
    fn invalid_specs_are_refused() {
        let mut s = spec(Predictor::AlwaysNegative);
        s.prevalence = 0.0;
        assert!(s.validate().is_err());
        s.prevalence = 1.0;
        assert!(s.validate().is_err());
        s.prevalence = 0.5;
        s.n_samples = 0;
        assert!(s.validate().is_err());
        s.n_samples = 10;
        s.predictor = Predictor::Noisy {
            sensitivity: 1.2,
            specificity: 0.5,
        };
        assert!(s.validate().is_err());
    }
}
