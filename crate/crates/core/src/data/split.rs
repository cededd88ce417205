//! Image-level fold assignment, stratified by class.
//!
//! Splitting happens before patching, so patches from one image can never
//! straddle a train/test boundary.

use crate::data::labels::LabelMode;
use crate::data::manifest::ImageRecord;
use crate::error::{Error, Result};
use crate::hash::Fnv64;
use crate::rng::Rng;

/// A partition of record indices into disjoint folds.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldAssignment {
    folds: Vec<Vec<usize>>,
    n_records: usize,
}

/// Stratified image-level split: per class, images are shuffled and dealt
/// round-robin across folds (class `c` starts at fold `c % folds`), so
/// per-fold class counts differ by at most one image.
pub fn split_by_image(
    records: &[ImageRecord],
    mode: LabelMode,
    folds: usize,
    rng: &mut Rng,
) -> Result<FoldAssignment> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }

    let num_classes = mode.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, record) in records.iter().enumerate() {
        by_class[mode.label_of(record.sensor)].push(i);
    }

    for (label, group) in by_class.iter().enumerate() {
        if !group.is_empty() && group.len() < folds {
            return Err(Error::Stratification(format!(
                "class {label} has only {} images but {folds} folds were requested",
                group.len()
            )));
        }
    }

    let mut fold_sets: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (label, group) in by_class.iter_mut().enumerate() {
        rng.shuffle(group);
        for (i, &record_idx) in group.iter().enumerate() {
            fold_sets[(label + i) % folds].push(record_idx);
        }
    }

    Ok(FoldAssignment {
        folds: fold_sets,
        n_records: records.len(),
    })
}

impl FoldAssignment {
    pub fn num_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn num_records(&self) -> usize {
        self.n_records
    }

    /// Record indices held out as the test set of round `test_fold`.
    pub fn test_indices(&self, test_fold: usize) -> &[usize] {
        &self.folds[test_fold]
    }

    /// Record indices of every other fold, in fold order.
    pub fn train_indices(&self, test_fold: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != test_fold)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect()
    }

    /// Content hash of the assignment; controlled comparisons (ablation
    /// sweeps) assert this is identical across variants.
    pub fn content_hash(&self) -> String {
        let mut hasher = Fnv64::new();
        for fold in &self.folds {
            hasher.update(&(fold.len() as u64).to_le_bytes());
            for &idx in fold {
                hasher.update(&(idx as u64).to_le_bytes());
            }
        }
        hasher.finish_hex()
    }
}
