//! Mini-batch momentum SGD, cross-validation, metrics and ablation sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod ablation;
pub mod cv;
pub mod metrics;
pub mod report;
pub mod sgd;

pub use ablation::{ablation_summary_csv, run_ablation, AblationOutcome, SweepKind};
pub use cv::{cross_validate, CvOptions, CvOutcome, FoldModel};
pub use metrics::{evaluate, evaluate_detailed, majority_votes, ConfusionMatrix, EvalOutcome};
pub use report::{ClassMetrics, DataProvenance, ExperimentReport};
pub use sgd::{batch_gradients, batch_gradients_seq, train_fold, GradSample, TrainHistory};

/// Optimizer and loop hyperparameters. None of these come from the problem
/// statement; defaults are conventional and echoed in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Multiplicative learning-rate decay applied every `lr_decay_every`
    /// epochs (0 disables decay).
    pub lr_decay: f64,
    pub lr_decay_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 128,
            epochs: 30,
            seed: 42,
            lr_decay: 0.5,
            lr_decay_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || !self.learning_rate.is_finite()
        {
            return Err(Error::InvalidHyperparameter(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidHyperparameter(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidHyperparameter("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidHyperparameter("epochs must be >= 1".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        Ok(())
    }

    /// Learning rate in effect for a 0-based epoch index.
    pub fn lr_for_epoch(&self, epoch: usize) -> f64 {
        let steps = epoch.checked_div(self.lr_decay_every).unwrap_or(0);
        self.learning_rate * self.lr_decay.powi(steps as i32)
    }
}
