//! The JSON-serializable record of one experiment.

use serde::{Deserialize, Serialize};

use crate::data::LabelMode;
use crate::model::ArchitectureConfig;
use crate::train::metrics::ConfusionMatrix;
use crate::train::TrainConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
}

/// Where the images came from; hashes make runs auditable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataProvenance {
    pub source: String,
    pub images: usize,
    pub content_hash: Option<String>,
}

/// Aggregated result of a (cross-validated) experiment.
///
/// Serialization is deterministic: identical runs produce byte-identical JSON.
/// Wall-clock time is therefore kept out of the serialized form and reported
/// through the run manifest instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub label_mode: LabelMode,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub folds: usize,
    /// Number of train/test rounds actually run (equal to `folds` for full
    /// cross-validation, 1 for a holdout split).
    pub rounds: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub image_vote_accuracy: Option<f64>,
    pub confusion_matrix: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub architecture: ArchitectureConfig,
    pub training: TrainConfig,
    pub fold_assignment_hash: String,
    pub data: DataProvenance,
    /// Mean training loss per epoch, per round.
    pub loss_history: Vec<Vec<f64>>,
    #[serde(skip, default)]
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    /// Arithmetic mean of the fold accuracies.
    pub fn mean_of(fold_accuracies: &[f64]) -> f64 {
        if fold_accuracies.is_empty() {
            0.0
        } else {
            fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_round_trips_and_omits_wall_clock() {
        let report = ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            label_mode: LabelMode::Model,
            class_names: vec!["IP5".into(), "SG4".into(), "SGT2".into()],
            seed: 7,
            folds: 10,
            rounds: 10,
            fold_accuracies: vec![0.5; 10],
            mean_accuracy: 0.5,
            image_vote_accuracy: None,
            confusion_matrix: ConfusionMatrix::new(3),
            per_class: vec![],
            architecture: ArchitectureConfig::canonical(3),
            training: TrainConfig::default(),
            fold_assignment_hash: "abc".into(),
            data: DataProvenance {
                source: "synthetic".into(),
                images: 0,
                content_hash: None,
            },
            loss_history: vec![],
            wall_clock_seconds: 123.4,
        };
        let json = report.to_json_pretty();
        assert!(!json.contains("wall_clock"));
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.mean_accuracy, 0.5);
        assert_eq!(back.wall_clock_seconds, 0.0);
    }

    #[test]
    fn mean_is_arithmetic() {
        assert!((ExperimentReport::mean_of(&[0.2, 0.4, 0.6]) - 0.4).abs() < 1e-15);
        assert_eq!(ExperimentReport::mean_of(&[]), 0.0);
    }
}
