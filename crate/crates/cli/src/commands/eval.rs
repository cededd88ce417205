//! `scinet eval`: evaluate a checkpoint against a manifest.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use scinet_core::data::{extract_dataset, load_manifest, normalize, LabelMode, ManifestOptions};
use scinet_core::model::load_checkpoint;
use scinet_core::train::{evaluate_detailed, majority_votes, ClassMetrics, ConfusionMatrix};
use scinet_core::Result;

use crate::context::{file_hash, OutDir, RunManifest};
use crate::{EvalArgs, VoteArg};

#[derive(Serialize)]
struct EvalReport {
    checkpoint: String,
    manifest: String,
    label_mode: LabelMode,
    class_names: Vec<String>,
    patches: usize,
    accuracy: f64,
    image_vote_accuracy: Option<f64>,
    confusion_matrix: ConfusionMatrix,
    per_class: Vec<ClassMetrics>,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let started = Instant::now();
    let loaded = load_checkpoint(&args.checkpoint)?;
    let num_classes = loaded.network.num_classes();

    let mode: LabelMode = match args.mode {
        Some(m) => m.into(),
        // 3 classes is the model-level experiment; anything else indexes the
        // sensor vocabulary.
        None => {
            if num_classes == LabelMode::Model.num_classes() {
                LabelMode::Model
            } else {
                LabelMode::Sensor
            }
        }
    };

    let manifest_hash = file_hash(&args.manifest)?;
    let records = load_manifest(
        &args.manifest,
        &ManifestOptions {
            allow_jpeg: args.allow_jpeg,
        },
    )?;
    let indices: Vec<usize> = (0..records.len()).collect();
    let mut dataset = extract_dataset(&records, &indices, mode, num_classes)?;
    normalize(&mut dataset, loaded.channel_means);

    let outcome = evaluate_detailed(&loaded.network, &dataset)?;
    let vote = if args.vote == VoteArg::Image {
        let (correct, total) = majority_votes(&dataset, &outcome.predictions)?;
        Some(correct as f64 / total as f64)
    } else {
        None
    };

    let per_class = dataset
        .class_names
        .iter()
        .enumerate()
        .map(|(c, name)| ClassMetrics {
            class: name.clone(),
            precision: outcome.confusion.precision(c),
            recall: outcome.confusion.recall(c),
        })
        .collect();

    let report = EvalReport {
        checkpoint: args.checkpoint.display().to_string(),
        manifest: args.manifest.display().to_string(),
        label_mode: mode,
        class_names: dataset.class_names.clone(),
        patches: dataset.patches.len(),
        accuracy: outcome.accuracy,
        image_vote_accuracy: vote,
        confusion_matrix: outcome.confusion.clone(),
        per_class,
    };

    let out = OutDir::claim(&args.out)?;
    std::fs::write(
        out.file("eval_report.json"),
        serde_json::to_string_pretty(&report)
            .map_err(|e| scinet_core::Error::Config(format!("report serialization failed: {e}")))?,
    )?;
    std::fs::write(
        out.file("confusion_matrix.csv"),
        outcome.confusion.to_csv(&dataset.class_names),
    )?;

    RunManifest {
        command: "eval".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: 0,
        resolved_config: serde_json::json!({
            "checkpoint": report.checkpoint,
            "label_mode": mode,
            "vote": matches!(args.vote, VoteArg::Image),
        }),
        input_hashes: BTreeMap::from([
            (report.checkpoint.clone(), file_hash(&args.checkpoint)?),
            (report.manifest.clone(), manifest_hash),
        ]),
        outputs: vec!["eval_report.json".into(), "confusion_matrix.csv".into()],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&out)?;

    println!("accuracy {:.6} over {} patches", outcome.accuracy, dataset.patches.len());
    if let Some(vote) = vote {
        println!("image majority-vote accuracy {vote:.6}");
    }
    Ok(())
}
