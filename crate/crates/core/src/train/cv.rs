//! The cross-validation driver: image-level splits, per-fold training and
//! evaluation, aggregation into an [`ExperimentReport`].

use std::time::Instant;

use crate::data::{
    channel_means, extract_dataset, normalize, split_by_image, ImageRecord, LabelMode,
};
use crate::error::{Error, Result};
use crate::model::{build_network, ArchitectureConfig, Network};
use crate::rng::Rng;
use crate::train::metrics::{evaluate_detailed, majority_votes, ConfusionMatrix};
use crate::train::report::{ClassMetrics, DataProvenance, ExperimentReport, REPORT_SCHEMA_VERSION};
use crate::train::sgd::train_fold;
use crate::train::TrainConfig;

#[derive(Clone, Debug)]
pub struct CvOptions {
    pub folds: usize,
    /// How many folds to actually run as test rounds; `None` runs all of them.
    /// `Some(1)` is the single holdout split (fold 0 held out).
    pub rounds: Option<usize>,
    /// Also compute the per-image majority-vote accuracy.
    pub image_vote: bool,
    pub provenance: DataProvenance,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            rounds: None,
            image_vote: false,
            provenance: DataProvenance {
                source: "unspecified".into(),
                images: 0,
                content_hash: None,
            },
        }
    }
}

/// The trained network of one round plus what evaluation needs to reproduce
/// its fold accuracy: the training-fold normalization and the test images.
pub struct FoldModel {
    pub fold: usize,
    pub network: Network<f32>,
    pub channel_means: [f32; 3],
    pub test_image_ids: Vec<String>,
}

pub struct CvOutcome {
    pub report: ExperimentReport,
    pub fold_models: Vec<FoldModel>,
}

/// Runs the experiment: split by image (stratified), then for each round
/// patch, normalize with training-fold statistics, train and evaluate.
pub fn cross_validate(
    records: &[ImageRecord],
    mode: LabelMode,
    arch: &ArchitectureConfig,
    train_cfg: &TrainConfig,
    opts: &CvOptions,
) -> Result<CvOutcome> {
    let started = Instant::now();
    arch.validate()?;
    train_cfg.validate()?;
    if arch.num_classes > mode.num_classes() {
        return Err(Error::Config(format!(
            "{} classes configured but {mode:?} mode has only {}",
            arch.num_classes,
            mode.num_classes()
        )));
    }
    let class_names = mode.class_names(arch.num_classes)?;

    let mut master = Rng::new(train_cfg.seed);
    let assignment = split_by_image(records, mode, opts.folds, &mut master)?;
    let rounds = match opts.rounds {
        Some(r) if r == 0 || r > opts.folds => {
            return Err(Error::Config(format!(
                "rounds must be in 1..={}, got {r}",
                opts.folds
            )))
        }
        Some(r) => r,
        None => opts.folds,
    };

    let mut fold_accuracies = Vec::with_capacity(rounds);
    let mut aggregate = ConfusionMatrix::new(arch.num_classes);
    let mut loss_history = Vec::with_capacity(rounds);
    let mut fold_models = Vec::with_capacity(rounds);
    let mut vote_correct = 0u64;
    let mut vote_total = 0u64;

    for fold in 0..rounds {
        let train_idx = assignment.train_indices(fold);
        let test_idx = assignment.test_indices(fold);

        let mut train_ds = extract_dataset(records, &train_idx, mode, arch.num_classes)?;
        let means = channel_means(&train_ds);
        normalize(&mut train_ds, means);

        let mut test_ds = extract_dataset(records, test_idx, mode, arch.num_classes)?;
        normalize(&mut test_ds, means);

        let mut fold_rng = master.fork(fold as u64);
        let net = build_network::<f32>(arch, &mut fold_rng)?;
        let (net, history) = train_fold(net, &train_ds, train_cfg, &mut fold_rng)?;

        let outcome = evaluate_detailed(&net, &test_ds)?;
        log::info!(
            "fold {fold}: test accuracy {:.4} over {} patches",
            outcome.accuracy,
            test_ds.patches.len()
        );
        fold_accuracies.push(outcome.accuracy);
        aggregate.add_assign(&outcome.confusion);
        loss_history.push(history.epoch_losses);

        if opts.image_vote {
            let (correct, total) = majority_votes(&test_ds, &outcome.predictions)?;
            vote_correct += correct;
            vote_total += total;
        }

        fold_models.push(FoldModel {
            fold,
            network: net,
            channel_means: means,
            test_image_ids: test_idx.iter().map(|&i| records[i].image_id.clone()).collect(),
        });
    }

    let per_class = class_names
        .iter()
        .enumerate()
        .map(|(c, name)| ClassMetrics {
            class: name.clone(),
            precision: aggregate.precision(c),
            recall: aggregate.recall(c),
        })
        .collect();

    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        label_mode: mode,
        class_names,
        seed: train_cfg.seed,
        folds: opts.folds,
        rounds,
        mean_accuracy: ExperimentReport::mean_of(&fold_accuracies),
        fold_accuracies,
        image_vote_accuracy: if opts.image_vote && vote_total > 0 {
            Some(vote_correct as f64 / vote_total as f64)
        } else {
            None
        },
        confusion_matrix: aggregate,
        per_class,
        architecture: arch.clone(),
        training: train_cfg.clone(),
        fold_assignment_hash: assignment.content_hash(),
        data: opts.provenance.clone(),
        loss_history,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };

    Ok(CvOutcome {
        report,
        fold_models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, SynthParams};

    fn quick_cfgs(classes: usize) -> (ArchitectureConfig, TrainConfig) {
        let arch = ArchitectureConfig {
            filters_per_conv: vec![4, 8],
            fc_sizes: vec![16, 16],
            num_classes: classes,
            ..ArchitectureConfig::canonical(classes)
        };
        let train = TrainConfig {
            epochs: 1,
            batch_size: 32,
            seed: 99,
            ..TrainConfig::default()
        };
        (arch, train)
    }

    fn small_records() -> Vec<ImageRecord> {
        generate_dataset(&SynthParams {
            classes: 3,
            images_per_class: 20,
            image_size: 32,
            sigma_fingerprint: 0.1,
            seed: 17,
            ..SynthParams::default()
        })
        .unwrap()
    }

    #[test]
    fn report_mean_matches_fold_accuracies() {
        let records = small_records();
        let (arch, train) = quick_cfgs(3);
        let outcome = cross_validate(
            &records,
            LabelMode::Model,
            &arch,
            &train,
            &CvOptions {
                folds: 5,
                ..CvOptions::default()
            },
        )
        .unwrap();
        let report = outcome.report;
        assert_eq!(report.rounds, 5);
        assert_eq!(report.fold_accuracies.len(), 5);
        let mean = report.fold_accuracies.iter().sum::<f64>() / 5.0;
        assert!((report.mean_accuracy - mean).abs() < 1e-12);
        // Every patch is tested exactly once: aggregate total == all patches.
        assert_eq!(report.confusion_matrix.total(), 60); // 60 images of 1 patch each
    }

    #[test]
    fn holdout_runs_one_round() {
        let records = small_records();
        let (arch, train) = quick_cfgs(3);
        let outcome = cross_validate(
            &records,
            LabelMode::Model,
            &arch,
            &train,
            &CvOptions {
                folds: 10,
                rounds: Some(1),
                image_vote: true,
                ..CvOptions::default()
            },
        )
        .unwrap();
        assert_eq!(outcome.report.rounds, 1);
        assert_eq!(outcome.fold_models.len(), 1);
        assert!(outcome.report.image_vote_accuracy.is_some());
        // Test fold holds 2 images per class.
        assert_eq!(outcome.fold_models[0].test_image_ids.len(), 6);
    }

    #[test]
    fn test_patches_come_only_from_the_test_fold() {
        let records = small_records();
        let (arch, train) = quick_cfgs(3);
        let outcome = cross_validate(
            &records,
            LabelMode::Model,
            &arch,
            &train,
            &CvOptions {
                folds: 5,
                ..CvOptions::default()
            },
        )
        .unwrap();
        // Each image id appears as a test image in exactly one fold.
        let mut seen = std::collections::HashSet::new();
        for fm in &outcome.fold_models {
            for id in &fm.test_image_ids {
                assert!(seen.insert(id.clone()), "{id} tested twice");
            }
        }
        assert_eq!(seen.len(), records.len());
    }

    #[test]
    fn class_count_beyond_mode_is_rejected() {
        let records = small_records();
        let (mut arch, train) = quick_cfgs(3);
        arch.num_classes = 4;
        assert!(matches!(
            cross_validate(&records, LabelMode::Model, &arch, &train, &CvOptions::default()),
            Err(Error::Config(_))
        ));
    }
}
