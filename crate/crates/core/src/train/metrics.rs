//! Accuracy, confusion matrices and per-image majority voting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::PatchDataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::model::Network;
use crate::tensor::Tensor;

/// Square count grid: rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class][predicted] += 1;
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// trace / total; 0 when empty.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    /// Column-wise correctness; 0 when the class was never predicted.
    pub fn precision(&self, class: usize) -> f64 {
        let predicted: u64 = self.counts.iter().map(|row| row[class]).sum();
        if predicted == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / predicted as f64
        }
    }

    /// Row-wise correctness; 0 when the class never occurred.
    pub fn recall(&self, class: usize) -> f64 {
        let actual: u64 = self.counts[class].iter().sum();
        if actual == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / actual as f64
        }
    }

    pub fn add_assign(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.num_classes(), other.num_classes());
        for (dst, src) in self.counts.iter_mut().zip(&other.counts) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    /// CSV rendering with a `true\pred` corner cell.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        assert_eq!(class_names.len(), self.num_classes());
        let mut out = String::from("true\\pred");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (row, name) in self.counts.iter().zip(class_names) {
            out.push_str(name);
            for &count in row {
                out.push_str(&format!(",{count}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Index of the largest probability; ties go to the lowest class index.
pub fn argmax(probs: &Tensor<f32>) -> usize {
    let mut best = 0;
    for (i, &p) in probs.data().iter().enumerate().skip(1) {
        if p > probs.data()[best] {
            best = i;
        }
    }
    best
}

pub struct EvalOutcome {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Predicted class per patch, in dataset order.
    pub predictions: Vec<usize>,
}

/// Inference-mode evaluation over every patch of `test`.
pub fn evaluate_detailed(net: &Network<f32>, test: &PatchDataset) -> Result<EvalOutcome> {
    if net.num_classes() != test.num_classes {
        return Err(Error::Config(format!(
            "network has {} classes but the dataset has {}",
            net.num_classes(),
            test.num_classes
        )));
    }
    if test.patches.is_empty() {
        return Err(Error::EmptyTestSet);
    }

    let chunk_preds = exec::map_chunks(&test.patches, 64, |chunk| {
        chunk
            .iter()
            .map(|patch| net.infer(&patch.pixels).map(|probs| argmax(&probs)))
            .collect::<Result<Vec<usize>>>()
    });

    let mut predictions = Vec::with_capacity(test.patches.len());
    for chunk in chunk_preds {
        predictions.extend(chunk?);
    }

    let mut confusion = ConfusionMatrix::new(test.num_classes);
    for (patch, &pred) in test.patches.iter().zip(&predictions) {
        confusion.record(patch.label, pred);
    }
    Ok(EvalOutcome {
        accuracy: confusion.accuracy(),
        confusion,
        predictions,
    })
}

/// Patch-level accuracy and confusion matrix.
pub fn evaluate(net: &Network<f32>, test: &PatchDataset) -> Result<(f64, ConfusionMatrix)> {
    let outcome = evaluate_detailed(net, test)?;
    Ok((outcome.accuracy, outcome.confusion))
}

/// Image-level majority vote over patch predictions: each image is assigned
/// the class most of its patches predict (ties to the lowest class index).
/// Returns (correct images, total images).
pub fn majority_votes(test: &PatchDataset, predictions: &[usize]) -> Result<(u64, u64)> {
    if predictions.len() != test.patches.len() {
        return Err(Error::Config(format!(
            "{} predictions for {} patches",
            predictions.len(),
            test.patches.len()
        )));
    }
    if test.patches.is_empty() {
        return Err(Error::EmptyTestSet);
    }

    let mut per_image: BTreeMap<&str, (usize, Vec<u64>)> = BTreeMap::new();
    for (patch, &pred) in test.patches.iter().zip(predictions) {
        let entry = per_image
            .entry(patch.source_image_id.as_str())
            .or_insert_with(|| (patch.label, vec![0; test.num_classes]));
        entry.1[pred] += 1;
    }

    let mut correct = 0u64;
    for (label, votes) in per_image.values() {
        let mut winner = 0;
        for (class, &count) in votes.iter().enumerate().skip(1) {
            if count > votes[winner] {
                winner = class;
            }
        }
        if winner == *label {
            correct += 1;
        }
    }
    Ok((correct, per_image.len() as u64))
}
